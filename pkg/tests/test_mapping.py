import numpy as np
import pytest

from entropic_ricci.core.chain import builtin
from entropic_ricci.core.mapping import (
    Move,
    builtin_representation,
    check_representation,
    custom_representation,
    mapping_representation,
    product_with_representation,
    transposition_representation,
)
from entropic_ricci.geometry.curvature import criterion_bound
from entropic_ricci.utils.errors import BadSpec, GeneratorMismatch, NoInverse, ShapeMismatch


def flip_move(rate=1.0):
    return Move(label="flip", targets=[1, 0], rates=[rate, rate], inverse="flip")


@pytest.mark.parametrize("spec", ["complete:3", "cycle:5", "hypercube:2", "twopoint:0.3,0.8"])
def test_transpositions_reproduce_generator(spec):
    chain = builtin(spec)
    rep = mapping_representation(chain)
    assert np.allclose(rep.generator_matrix(), chain.laplacian, atol=1e-14)


@pytest.mark.parametrize("spec", ["hypercube:3", "cycle:6", "torus:3x4"])
def test_builtin_representations_validate(spec):
    chain = builtin(spec)
    rep = builtin_representation(spec, chain)
    assert np.allclose(rep.generator_matrix(), chain.laplacian, atol=1e-14)


def test_gradient_shape_and_values(square):
    rep = builtin_representation("hypercube:2", square)
    psi = np.array([0.0, 1.0, 2.0, 3.0])
    grad = rep.gradient(psi)
    assert grad.shape == (4, 2)
    # flip0 toggles the leading bit: 00 -> 10
    assert grad[0, 0] == pytest.approx(2.0)
    assert grad[0, 1] == pytest.approx(1.0)


def test_custom_two_point_move(twopoint):
    rep = check_representation(custom_representation(twopoint, [flip_move()]))
    assert rep.involutive() and rep.commutes() and rep.rate_invariant()


def test_wrong_rates_fail_generator_identity(twopoint):
    with pytest.raises(GeneratorMismatch):
        mapping_representation(twopoint, [flip_move(0.5)])


def test_missing_inverse(twopoint):
    move = Move(label="flip", targets=[1, 0], rates=[1.0, 1.0], inverse="back")
    with pytest.raises(NoInverse):
        custom_representation(twopoint, [move])


def test_inverse_that_does_not_undo(cycle4):
    plus = Move(label="+", targets=[1, 2, 3, 0], rates=[0.5] * 4, inverse="-")
    minus = Move(label="-", targets=[1, 2, 3, 0], rates=[0.5] * 4, inverse="+")
    with pytest.raises((NoInverse, GeneratorMismatch)):
        mapping_representation(cycle4, [plus, minus])


def test_duplicate_labels_and_bad_shapes(twopoint):
    with pytest.raises(BadSpec):
        custom_representation(twopoint, [flip_move(), flip_move()])
    short = Move(label="flip", targets=[1], rates=[1.0], inverse="flip")
    with pytest.raises(ShapeMismatch):
        custom_representation(twopoint, [short])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_criterion_on_hypercube(n):
    chain = builtin(f"hypercube:{n}")
    bound = criterion_bound(builtin_representation(f"hypercube:{n}", chain))
    assert bound is not None
    assert bound.value == pytest.approx(2.0 / n)
    assert bound.provenance == "criterion"


def test_criterion_on_cycle_gives_zero():
    chain = builtin("cycle:5")
    bound = criterion_bound(builtin_representation("cycle:5", chain))
    assert bound is not None and bound.value == 0.0


def test_criterion_inapplicable_to_transpositions(complete3):
    assert criterion_bound(transposition_representation(complete3)) is None


def test_product_representation_of_two_point_factors(twopoint):
    factor = (twopoint, custom_representation(twopoint, [flip_move()]))
    chain, rep = product_with_representation([factor, factor], [0.5, 0.5])
    assert np.allclose(chain.kernel, builtin("hypercube:2").kernel)
    bound = criterion_bound(rep)
    assert bound.value == pytest.approx(1.0)
