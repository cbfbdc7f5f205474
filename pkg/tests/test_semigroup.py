import math

import numpy as np
import pytest

from conftest import random_interior
from entropic_ricci.analysis.semigroup import (
    dirichlet_form,
    entropy,
    entropy_dissipation,
    fisher,
    heat,
    linearisation,
    poincare_lambda,
)
from entropic_ricci.core.chain import builtin
from entropic_ricci.utils.errors import NegativeInput


def test_heat_fixes_constants(square):
    assert np.allclose(heat(square, square.uniform(), 1.0), 1.0)


def test_heat_at_zero_is_identity(cycle4, rng):
    rho = random_interior(cycle4, rng)
    assert np.array_equal(heat(cycle4, rho, 0.0), rho)
    with pytest.raises(NegativeInput):
        heat(cycle4, rho, -0.1)


def test_heat_matches_matrix_exponential(complete3, rng):
    from scipy.linalg import expm

    rho = random_interior(complete3, rng)
    expected = expm(0.7 * complete3.laplacian) @ rho
    assert np.allclose(heat(complete3, rho, 0.7), expected, atol=1e-12)


def test_semigroup_property_and_mass(cycle4, rng):
    rho = random_interior(cycle4, rng)
    direct = heat(cycle4, rho, 0.8)
    composed = heat(cycle4, heat(cycle4, rho, 0.3), 0.5)
    assert np.allclose(direct, composed, atol=1e-12)
    assert cycle4.mass(direct) == pytest.approx(1.0)


def test_heat_batches(square, rng):
    rhos = random_interior(square, rng, count=3)
    batch = heat(square, rhos, 0.4)
    assert np.allclose(batch, np.array([heat(square, r, 0.4) for r in rhos]))


def test_convergence_to_equilibrium(square):
    assert np.allclose(heat(square, square.dirac(0), 40.0), 1.0, atol=1e-12)


@pytest.mark.parametrize("spec,gap", [
    ("hypercube:2", 1.0),
    ("hypercube:3", 2.0 / 3.0),
    ("complete:4", 1.0),
    ("twopoint:0.3,0.6", 0.9),
    ("cycle:6", 1.0 - math.cos(2 * math.pi / 6)),
])
def test_poincare_constant(spec, gap):
    assert poincare_lambda(builtin(spec)) == pytest.approx(gap, rel=1e-10)


def test_poincare_inequality_on_random_functions(cycle4, rng):
    lam = poincare_lambda(cycle4)
    for _ in range(20):
        phi = rng.standard_normal(4)
        centred = phi - np.dot(cycle4.pi, phi)
        variance = float(np.dot(cycle4.pi, centred**2))
        assert lam * variance <= dirichlet_form(cycle4, phi) + 1e-12


def test_entropy_of_dirac_on_square(square):
    assert entropy(square, square.dirac(0)) == pytest.approx(math.log(4.0))
    assert fisher(square, square.dirac(0)) == math.inf


def test_entropy_decreases_along_heat_flow(square):
    values = [entropy(square, heat(square, square.dirac(0), t)) for t in (0.0, 0.1, 0.5, 1.0, 3.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("t", [0.05, 0.3, 1.0])
def test_entropy_dissipation_is_minus_fisher(complete3, rng, t):
    rho = random_interior(complete3, rng, floor=0.1)
    derivative, minus_fisher = entropy_dissipation(complete3, rho, t)
    assert derivative == pytest.approx(minus_fisher, rel=1e-6, abs=1e-10)


def test_linearisation_limits(cycle4):
    phi = np.array([1.0, -0.5, 0.25, -0.75])
    result = linearisation(cycle4, phi)
    assert result.entropy_limit == pytest.approx(result.entropy_target, rel=1e-5)
    assert result.fisher_limit == pytest.approx(result.fisher_target, rel=1e-5)
    assert len(result.entropy_ratios) == 2


def test_linearisation_argument_checks(cycle4):
    with pytest.raises(NegativeInput):
        linearisation(cycle4, np.ones(4), eps=(1e-3, 1e-2))
    with pytest.raises(NegativeInput):
        linearisation(cycle4, np.array([200.0, -200.0, 0.0, 0.0]))
