import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropic_ricci.transport.means import (
    MeanEvaluation,
    alpha,
    alpha_cost,
    alpha_derivatives,
    arithmetic_mean_value,
    log_mean,
    theta,
    theta_constant_c,
    theta_hessian,
    theta_partials,
)
from entropic_ricci.utils.errors import BoundaryDerivative, NegativeInput

positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)


def test_reference_values():
    assert theta(1.0, 1.0) == pytest.approx(1.0, rel=1e-15)
    assert theta(2.0, 1.0) == pytest.approx(1.0 / math.log(2.0), rel=1e-14)
    assert theta(math.e, 1.0) == pytest.approx(math.e - 1.0, rel=1e-14)


def test_boundary_is_zero():
    assert theta(0.0, 5.0) == 0.0
    assert theta(3.0, 0.0) == 0.0
    assert theta(0.0, 0.0) == 0.0


def test_negative_input_raises():
    with pytest.raises(NegativeInput):
        theta(-1.0, 1.0)
    with pytest.raises(NegativeInput):
        log_mean(1.0, -1e-3)


def test_near_diagonal_is_continuous():
    s = 1.0 + np.array([0.0, 1e-12, 1e-9, 5e-9, 2e-8, 1e-6])
    values = theta(s, 1.0)
    # theta(1 + d, 1) = 1 + d/2 - d^2/12 + ...
    expected = 1.0 + (s - 1.0) / 2.0 - (s - 1.0) ** 2 / 12.0
    assert np.allclose(values, expected, rtol=0, atol=1e-15)


def test_broadcasting():
    s = np.array([[1.0], [2.0]])
    t = np.array([1.0, 3.0, 0.0])
    out = theta(s, t)
    assert out.shape == (2, 3)
    assert out[1, 2] == 0.0
    assert out[0, 1] == pytest.approx(theta(1.0, 3.0))


@given(positive, positive)
def test_symmetric_and_between_geometric_and_arithmetic(s, t):
    v = float(theta(s, t))
    assert v == pytest.approx(float(theta(t, s)), rel=1e-12)
    assert math.sqrt(s * t) * (1 - 1e-12) <= v <= 0.5 * (s + t) * (1 + 1e-12)


@given(positive, positive, st.floats(min_value=1e-3, max_value=1e3))
def test_homogeneous_of_degree_one(s, t, lam):
    assert float(theta(lam * s, lam * t)) == pytest.approx(lam * float(theta(s, t)), rel=1e-11)


@given(positive, positive)
def test_euler_identity(s, t):
    d1, d2 = theta_partials(s, t)
    assert s * d1 + t * d2 == pytest.approx(float(theta(s, t)), rel=1e-10)


@settings(max_examples=60)
@given(st.floats(min_value=0.05, max_value=20), st.floats(min_value=0.05, max_value=20),
       st.floats(min_value=0.05, max_value=20), st.floats(min_value=0.05, max_value=20))
def test_four_point_concavity(a, b, c, d):
    # theta is jointly concave: the midpoint value dominates the average
    mid = float(theta(0.5 * (a + c), 0.5 * (b + d)))
    assert mid >= 0.5 * (float(theta(a, b)) + float(theta(c, d))) - 1e-12


@pytest.mark.parametrize("s,t", [(1.0, 1.0), (1.0, 1.0 + 1e-5), (2.0, 1.0), (0.3, 7.0), (1.0, 1.0 + 5e-3)])
def test_partials_match_finite_differences(s, t):
    h = 1e-6 * max(s, t)
    d1, d2 = theta_partials(s, t)
    fd1 = (theta(s + h, t) - theta(s - h, t)) / (2 * h)
    fd2 = (theta(s, t + h) - theta(s, t - h)) / (2 * h)
    assert float(d1) == pytest.approx(float(fd1), rel=1e-6, abs=1e-9)
    assert float(d2) == pytest.approx(float(fd2), rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("s,t", [(1.0, 1.0), (1.0, 1.001), (2.0, 1.0), (0.3, 7.0)])
def test_hessian_matches_finite_differences(s, t):
    h = 1e-5 * max(s, t)
    d11, d12, d22 = theta_hessian(s, t)
    a1, _ = theta_partials(s + h, t)
    b1, _ = theta_partials(s - h, t)
    _, a2 = theta_partials(s, t + h)
    _, b2 = theta_partials(s, t - h)
    c1, _ = theta_partials(s, t + h)
    e1, _ = theta_partials(s, t - h)
    assert float(d11) == pytest.approx(float((a1 - b1) / (2 * h)), rel=1e-5, abs=1e-8)
    assert float(d22) == pytest.approx(float((a2 - b2) / (2 * h)), rel=1e-5, abs=1e-8)
    assert float(d12) == pytest.approx(float((c1 - e1) / (2 * h)), rel=1e-5, abs=1e-8)


def test_diagonal_derivatives():
    d1, d2 = theta_partials(3.0, 3.0)
    assert float(d1) == pytest.approx(0.5)
    assert float(d2) == pytest.approx(0.5)
    d11, d12, d22 = theta_hessian(2.0, 2.0)
    assert float(d11) == pytest.approx(-1.0 / 12.0)
    assert float(d12) == pytest.approx(1.0 / 12.0)
    assert float(d22) == pytest.approx(-1.0 / 12.0)


def test_derivatives_rejected_on_boundary():
    with pytest.raises(BoundaryDerivative):
        theta_partials(0.0, 1.0)
    with pytest.raises(BoundaryDerivative):
        theta_hessian(1.0, 0.0)
    evaluation = log_mean(0.0, 2.0)
    assert evaluation.value == 0.0
    with pytest.raises(BoundaryDerivative):
        evaluation.gradient()


def test_log_mean_gradient():
    evaluation = log_mean(2.0, 1.0)
    assert isinstance(evaluation, MeanEvaluation)
    d1, d2 = evaluation.gradient()
    assert d1 + d2 > 0


def test_alpha_extension():
    assert alpha_cost(0.0, 0.0, 1.0) == 0.0
    assert alpha_cost(1.0, 0.0, 1.0) == math.inf
    assert alpha_cost(2.0, 1.0, 1.0) == pytest.approx(4.0)
    assert np.all(alpha(np.array([1.0, -1.0]), 0.0, 0.0) == np.inf)


@settings(max_examples=60)
@given(st.floats(min_value=-5, max_value=5), st.floats(min_value=0.05, max_value=5), st.floats(min_value=0.05, max_value=5),
       st.floats(min_value=-5, max_value=5), st.floats(min_value=0.05, max_value=5), st.floats(min_value=0.05, max_value=5))
def test_alpha_is_convex(x1, s1, t1, x2, s2, t2):
    mid = alpha_cost(0.5 * (x1 + x2), 0.5 * (s1 + s2), 0.5 * (t1 + t2))
    assert mid <= 0.5 * (alpha_cost(x1, s1, t1) + alpha_cost(x2, s2, t2)) * (1 + 1e-12) + 1e-12


def test_alpha_derivatives_against_finite_differences():
    x, s, t = 0.7, 1.3, 0.4
    (ax, as_, at), _ = alpha_derivatives(x, s, t)
    h = 1e-6
    assert float(ax) == pytest.approx((alpha_cost(x + h, s, t) - alpha_cost(x - h, s, t)) / (2 * h), rel=1e-6)
    assert float(as_) == pytest.approx((alpha_cost(x, s + h, t) - alpha_cost(x, s - h, t)) / (2 * h), rel=1e-6)
    assert float(at) == pytest.approx((alpha_cost(x, s, t + h) - alpha_cost(x, s, t - h)) / (2 * h), rel=1e-6)


def test_constant_c():
    c = theta_constant_c()
    assert c == pytest.approx(1.56, abs=0.01)


def test_constant_c_for_arithmetic_mean():
    assert theta_constant_c(arithmetic_mean_value) == pytest.approx(math.sqrt(2.0), rel=1e-9)
