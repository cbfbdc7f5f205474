import math

import numpy as np
import pytest

from conftest import random_interior
from entropic_ricci.transport.calculus import (
    action,
    action_prime,
    divergence,
    entropy,
    fisher,
    gradient,
    laplacian,
    pi_inner,
    rho_hat,
)
from entropic_ricci.utils.errors import ShapeMismatch


@pytest.mark.parametrize("fixture", ["square", "cycle4", "complete3"])
def test_integration_by_parts(fixture, request, rng):
    chain = request.getfixturevalue(fixture)
    psi = rng.standard_normal(chain.n)
    V = rng.standard_normal((chain.n, chain.n))
    lhs = pi_inner(chain, gradient(chain, psi), V)
    rhs = -pi_inner(chain, psi, divergence(chain, V))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-13)


def test_divergence_of_gradient_is_laplacian(cycle4, rng):
    psi = rng.standard_normal(4)
    assert np.allclose(divergence(cycle4, gradient(cycle4, psi)), laplacian(cycle4, psi), atol=1e-14)


def test_action_at_uniform_is_dirichlet_form(square):
    psi = np.array([0.0, 1.0, 1.0, 2.0])
    # four edges with weight 1/8 each and unit increments
    assert action(square, square.uniform(), psi) == pytest.approx(0.5)


def test_action_prime_matches_action_for_gradient_fields(complete3, rng):
    rho = random_interior(complete3, rng)
    psi = rng.standard_normal(3)
    V = rho_hat(complete3, rho) * gradient(complete3, psi)
    assert action_prime(complete3, rho, V) == pytest.approx(action(complete3, rho, psi), rel=1e-12)


def test_action_prime_is_infinite_across_empty_edge(twopoint):
    rho = np.array([2.0, 0.0])
    V = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert action_prime(twopoint, rho, V) == math.inf
    assert action_prime(twopoint, rho, np.zeros((2, 2))) == 0.0


def test_entropy_values(square):
    assert entropy(square, square.uniform()) == 0.0
    assert entropy(square, square.dirac(0)) == pytest.approx(math.log(4.0))


def test_fisher_values(twopoint):
    assert fisher(twopoint, twopoint.uniform()) == 0.0
    assert fisher(twopoint, np.array([2.0, 0.0])) == math.inf
    rho = np.array([1.5, 0.5])
    # 1/2 * 2 * (1/2) * (1.5 - 0.5) * log 3
    assert fisher(twopoint, rho) == pytest.approx(0.5 * math.log(3.0))


def test_shape_errors(square):
    with pytest.raises(ShapeMismatch):
        divergence(square, np.zeros((3, 3)))
    with pytest.raises(ShapeMismatch):
        pi_inner(square, np.zeros(4), np.zeros((4, 4)))
    with pytest.raises(ShapeMismatch):
        gradient(square, np.zeros(3))
