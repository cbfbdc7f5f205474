import numpy as np
import pytest

from entropic_ricci.core.chain import (
    builtin,
    graph_distance,
    lazy,
    product,
    product_coordinates,
    product_states,
    stationary_vector,
    two_point_chain,
    validate_chain,
)
from entropic_ricci.utils.errors import (
    BadLambda,
    BadSpec,
    EmptyProduct,
    NotIrreducible,
    NotReversible,
    NotStochastic,
    ShapeMismatch,
    WeightSum,
)


def test_two_point_stationary_vector():
    chain = validate_chain([[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(chain.pi, [0.5, 0.5])


def test_asymmetric_two_point_stationary_vector():
    chain = validate_chain([[0.7, 0.3], [0.6, 0.4]])
    assert np.allclose(chain.pi, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)
    assert np.allclose(stationary_vector(chain.kernel), chain.pi)


def test_rejects_rows_not_summing_to_one():
    with pytest.raises(NotStochastic) as info:
        validate_chain([[0.5, 0.6], [0.5, 0.5]])
    assert info.value.name == "NotStochastic"


def test_rejects_negative_entries():
    with pytest.raises(NotStochastic):
        validate_chain([[1.2, -0.2], [0.5, 0.5]])


def test_rejects_disconnected_support():
    with pytest.raises(NotIrreducible):
        validate_chain(np.eye(3))


def test_rejects_non_reversible_rotation():
    K = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    with pytest.raises(NotReversible):
        validate_chain(K)


def test_rejects_wrong_pi():
    with pytest.raises(NotReversible):
        validate_chain([[0.7, 0.3], [0.6, 0.4]], pi=[0.5, 0.5])
    with pytest.raises(ShapeMismatch):
        validate_chain([[0.5, 0.5], [0.5, 0.5]], pi=[1.0])


def test_chain_arrays_are_read_only():
    chain = builtin("cycle:3")
    with pytest.raises(ValueError):
        chain.kernel[0, 0] = 1.0


@pytest.mark.parametrize("spec,n", [("complete:4", 4), ("cycle:5", 5), ("hypercube:3", 8),
                                    ("twopoint:0.3,0.7", 2), ("torus:3x3", 9)])
def test_builtins_validate(spec, n):
    chain = builtin(spec)
    assert chain.n == n
    assert np.allclose(chain.kernel.sum(axis=1), 1.0, atol=1e-12)
    flux = chain.weights
    assert np.allclose(flux, flux.T, atol=1e-12)


@pytest.mark.parametrize("spec", ["", "circle:3", "cycle:x", "twopoint:0.5", "twopoint:0,1", "hypercube:0"])
def test_bad_builtin_specs(spec):
    with pytest.raises(BadSpec):
        builtin(spec)


def test_hypercube_labels_and_rates():
    chain = builtin("hypercube:2")
    assert chain.states == ("00", "01", "10", "11")
    assert chain.kernel[0, 1] == pytest.approx(0.5)
    assert chain.kernel[0, 3] == 0.0


def test_two_point_pi():
    chain = two_point_chain(0.2, 0.6)
    assert np.allclose(chain.pi, [0.75, 0.25])


def test_dirac_and_uniform():
    chain = builtin("twopoint:0.2,0.6")
    rho = chain.dirac("1")
    assert chain.mass(rho) == pytest.approx(1.0)
    assert rho[0] == 0.0
    assert np.all(chain.uniform() == 1.0)
    with pytest.raises(BadSpec):
        chain.dirac("7")


def test_check_density():
    chain = builtin("cycle:4")
    with pytest.raises(BadSpec):
        chain.check_density([1.0, 1.0, 1.0, 2.0])
    with pytest.raises(ShapeMismatch):
        chain.check_density([1.0, 1.0])
    with pytest.raises(BadSpec):
        chain.check_density([2.0, 0.0, 1.0, 1.0], interior=True)


def test_lazy_kernel():
    chain = builtin("twopoint:1,1")
    half = lazy(chain, 0.5)
    assert np.allclose(half.kernel, [[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(half.pi, chain.pi)
    for lam in (0.0, 1.0, -0.5):
        with pytest.raises(BadLambda):
            lazy(chain, lam)


def test_product_of_two_point_chains_is_hypercube():
    factor = builtin("twopoint:1,1")
    prod = product([factor, factor], [0.5, 0.5])
    assert np.allclose(prod.kernel, builtin("hypercube:2").kernel)
    assert product_states([factor, factor]) == ["0,0", "0,1", "1,0", "1,1"]


def test_product_errors():
    factor = builtin("twopoint:1,1")
    with pytest.raises(EmptyProduct):
        product([], [])
    with pytest.raises(WeightSum):
        product([factor, factor], [0.5, 0.6])


def test_product_coordinates_first_factor_slowest():
    coords = product_coordinates([2, 3])
    assert coords.tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]


def test_graph_distance():
    d = graph_distance(builtin("cycle:6"))
    assert d[0, 3] == 3
    assert d[0, 5] == 1
    assert graph_distance(builtin("hypercube:3"))[0, 7] == 3


def test_summary():
    summary = builtin("hypercube:3").summary()
    assert summary["diameter"] == 3
    assert summary["reversibility_residual"] <= 1e-15
    assert len(summary["states"]) == 8
