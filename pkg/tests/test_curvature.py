import math

import numpy as np
import pytest

from conftest import random_interior
from entropic_ricci.core.chain import builtin, lazy, product
from entropic_ricci.core.mapping import builtin_representation, transposition_representation
from entropic_ricci.geometry.curvature import (
    _RatioObjective,
    a_form,
    b_form,
    b_form_batch,
    certified_bound,
    combine_bounds,
    curvature_report,
    form_gradients,
    forms_agree,
    kernel_forms,
    lazy_bound,
    representation_forms,
    representation_forms_matrix,
    ricci_estimate,
    sample_margins,
    two_point_kappa,
)
from entropic_ricci.utils.config import CurvatureConfig
from entropic_ricci.utils.errors import BadLambda, BadRate, BoundaryDensity, WeightSum


def test_two_point_reference_values(twopoint):
    rho = np.ones(2)
    psi = np.array([0.0, 1.0])
    assert a_form(twopoint, rho, psi) == pytest.approx(0.5)
    assert b_form(twopoint, rho, psi) == pytest.approx(1.0)


def test_forms_reject_boundary_densities(twopoint):
    with pytest.raises(BoundaryDensity):
        kernel_forms(twopoint, [2.0, 0.0], [0.0, 1.0])


def test_batched_forms_match_single(square, rng):
    rhos = random_interior(square, rng, count=5)
    psis = rng.standard_normal((5, 4))
    batch = b_form_batch(square, rhos, psis)
    single = [b_form(square, r, p) for r, p in zip(rhos, psis)]
    assert np.allclose(batch, single, rtol=1e-13, atol=1e-14)


def test_forms_are_invariant_under_constant_shift(cycle4, rng):
    rho = random_interior(cycle4, rng)
    psi = rng.standard_normal(4)
    assert np.allclose(kernel_forms(cycle4, rho, psi), kernel_forms(cycle4, rho, psi + 3.0), rtol=1e-12)


@pytest.mark.parametrize("spec", ["hypercube:2", "cycle:4", "complete:3", "torus:3x3"])
def test_mapping_form_agrees_with_kernel_form(spec, rng):
    chain = builtin(spec)
    rep = builtin_representation(spec, chain)
    for _ in range(3):
        rho = random_interior(chain, rng, floor=0.01)
        psi = rng.standard_normal(chain.n)
        assert forms_agree(chain, rho, psi, rep)
        b_kernel, a_kernel = kernel_forms(chain, rho, psi)
        b_matrix, a_matrix = representation_forms_matrix(rep, rho, psi)
        assert b_matrix == pytest.approx(float(b_kernel), rel=1e-10, abs=1e-12)
        assert a_matrix == pytest.approx(float(a_kernel), rel=1e-10, abs=1e-12)


def test_transposition_form_on_asymmetric_two_point(rng):
    chain = builtin("twopoint:0.3,0.8")
    rep = transposition_representation(chain)
    rho = random_interior(chain, rng)
    psi = rng.standard_normal(2)
    b_map, a_map = representation_forms(rep, rho, psi)
    b_kernel, a_kernel = kernel_forms(chain, rho, psi)
    assert b_map == pytest.approx(float(b_kernel), rel=1e-10)
    assert a_map == pytest.approx(float(a_kernel), rel=1e-10)


def test_lazy_scaling(complete3, rng):
    lam = 0.3
    slow = lazy(complete3, lam)
    rho = random_interior(complete3, rng)
    psi = rng.standard_normal(3)
    B, A = kernel_forms(complete3, rho, psi)
    B_lazy, A_lazy = kernel_forms(slow, rho, psi)
    assert float(A_lazy) == pytest.approx(lam * float(A), rel=1e-12)
    assert float(B_lazy) == pytest.approx(lam * lam * float(B), rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("fixture", ["square", "complete3"])
def test_form_gradients_match_finite_differences(fixture, request, rng):
    chain = request.getfixturevalue(fixture)
    rho = random_interior(chain, rng, floor=0.2)
    psi = rng.standard_normal(chain.n)
    B, A, dB_rho, dB_psi, dA_rho, dA_psi = form_gradients(chain, rho, psi)
    assert B == pytest.approx(b_form(chain, rho, psi), rel=1e-12)
    h = 1e-6
    for i in range(chain.n):
        e = np.zeros(chain.n)
        e[i] = h
        fd_b_rho = (b_form(chain, rho + e, psi) - b_form(chain, rho - e, psi)) / (2 * h)
        fd_a_rho = (a_form(chain, rho + e, psi) - a_form(chain, rho - e, psi)) / (2 * h)
        fd_b_psi = (b_form(chain, rho, psi + e) - b_form(chain, rho, psi - e)) / (2 * h)
        fd_a_psi = (a_form(chain, rho, psi + e) - a_form(chain, rho, psi - e)) / (2 * h)
        assert dB_rho[i] == pytest.approx(fd_b_rho, rel=1e-5, abs=1e-7)
        assert dA_rho[i] == pytest.approx(fd_a_rho, rel=1e-5, abs=1e-7)
        assert dB_psi[i] == pytest.approx(fd_b_psi, rel=1e-5, abs=1e-7)
        assert dA_psi[i] == pytest.approx(fd_a_psi, rel=1e-5, abs=1e-7)


def test_ratio_objective_gradient(square, rng):
    objective = _RatioObjective(square, 1e-3)
    z = np.concatenate([0.3 * rng.standard_normal(4), rng.standard_normal(4)])
    value, grad = objective(z)
    h = 1e-6
    for i in range(z.size):
        e = np.zeros(z.size)
        e[i] = h
        fd = (objective(z + e)[0] - objective(z - e)[0]) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_two_point_formula():
    assert two_point_kappa(1.0, 1.0).value == pytest.approx(2.0, abs=1e-9)
    assert two_point_kappa(0.5, 0.5).value == pytest.approx(1.0, abs=1e-9)
    for p, q in [(0.2, 0.9), (1.0, 0.1), (0.6, 0.3)]:
        bound = two_point_kappa(p, q)
        assert bound.value >= 0.5 * (p + q) + math.sqrt(p * q) - 1e-12
        assert two_point_kappa(q, p).value == pytest.approx(bound.value, rel=1e-9)
    with pytest.raises(BadRate):
        two_point_kappa(0.0, 0.5)


def test_combine_and_lazy_bounds(twopoint):
    combined = combine_bounds([(twopoint, 2.0, 0.5), (twopoint, 2.0, 0.5)])
    assert combined.value == pytest.approx(1.0)
    assert combined.provenance == "tensorisation"
    with pytest.raises(WeightSum):
        combine_bounds([(twopoint, 2.0, 0.5), (twopoint, 2.0, 0.6)])
    assert lazy_bound(2.0, 0.5).value == pytest.approx(1.0)
    with pytest.raises(BadLambda):
        lazy_bound(2.0, 1.5)


def test_certified_bound_sources(twopoint, square, complete3):
    assert certified_bound(twopoint).value == pytest.approx(2.0, abs=1e-9)
    rep = builtin_representation("hypercube:2", square)
    assert certified_bound(square, rep).value == pytest.approx(1.0)
    assert certified_bound(complete3, transposition_representation(complete3)) is None


@pytest.mark.parametrize(
    "spec,kappa",
    [
        ("hypercube:2", 1.0),
        ("cycle:4", 0.0),
        ("complete:3", 0.5),
        ("cycle:5", 0.0),
        ("torus:3x3", 0.0),
        ("complete:5", 0.5),
    ],
)
def test_sampling_finds_no_violation_of_known_bounds(spec, kappa):
    chain = builtin(spec)
    summary = sample_margins(chain, kappa, samples=3000, seed=7, batch=1000)
    assert summary.samples == 3000
    assert summary.violations == 0
    assert summary.min_margin >= -1e-8


def test_sampling_ratio_on_hypercube():
    summary = sample_margins(builtin("hypercube:2"), 1.0, samples=3000, seed=11, batch=512, keep_witness=True)
    assert summary.min_ratio >= 1.0 - 1e-8
    assert len(summary.witness_rho) == 4


def test_curvature_report_without_estimate(square):
    report = curvature_report(square, builtin_representation("hypercube:2", square), estimate=False)
    assert report.kappa_certified == pytest.approx(1.0)
    assert report.certified_provenance == "criterion"
    assert report.kappa_estimated is None


def test_estimate_never_undercuts_the_two_point_value(twopoint):
    config = CurvatureConfig(restarts=4, samples=200, max_iter=200)
    report = ricci_estimate(twopoint, config, certified_bound(twopoint))
    assert report.converged_restarts >= 1
    assert report.kappa_estimated >= 2.0 - 1e-8
    assert report.consistent
    assert report.certified_sampling.violations == 0


def test_estimate_is_reproducible(twopoint):
    config = CurvatureConfig(restarts=3, samples=0, max_iter=100)
    one = ricci_estimate(twopoint, config, workers=1)
    many = ricci_estimate(twopoint, config, workers=3)
    assert one.kappa_estimated == many.kappa_estimated


@pytest.mark.slow
def test_estimate_recovers_two_point_curvature(twopoint):
    report = ricci_estimate(twopoint, CurvatureConfig(restarts=16, samples=10000))
    assert report.kappa_estimated == pytest.approx(2.0, abs=1e-3)


@pytest.mark.slow
def test_estimate_on_hypercube(square):
    report = ricci_estimate(square, CurvatureConfig(restarts=16, samples=10000))
    assert report.kappa_estimated == pytest.approx(1.0, abs=1e-3)
    assert report.sampling.min_ratio >= 1.0 - 1e-8


def _two_point_product():
    factors = [builtin("twopoint:0.3,0.7"), builtin("twopoint:0.5,0.5")]
    chain = product(factors, [0.5, 0.5])
    parts = [(f, two_point_kappa(float(f.kernel[0, 1]), float(f.kernel[1, 0])).value, 0.5) for f in factors]
    return chain, combine_bounds(parts)


def test_tensorised_bound_survives_sampling():
    chain, combined = _two_point_product()
    summary = sample_margins(chain, combined.value, samples=3000, seed=5, batch=1000)
    assert summary.violations == 0


@pytest.mark.slow
def test_estimate_on_product_respects_tensorised_bound():
    chain, combined = _two_point_product()
    report = ricci_estimate(chain, CurvatureConfig(restarts=8, samples=2000))
    assert report.kappa_estimated >= combined.value - 1e-6
