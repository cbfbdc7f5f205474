import math

import numpy as np
import pytest

from conftest import random_interior
from entropic_ricci.transport.solver import solve_W
from entropic_ricci.transport.wasserstein import (
    comparison_table,
    min_rate,
    optimal_coupling,
    total_variation,
    wasserstein,
)
from entropic_ricci.utils.config import SolverConfig
from entropic_ricci.utils.errors import ShapeMismatch

FAST = SolverConfig(grid=16)


def test_total_variation_of_diracs(square):
    assert total_variation(square, square.dirac(0), square.dirac(3)) == pytest.approx(2.0)


def test_graph_wasserstein_of_diracs(square):
    assert wasserstein(square, square.dirac(0), square.dirac(3), "graph", 1) == pytest.approx(2.0)
    assert wasserstein(square, square.dirac(0), square.dirac(3), "graph", 2) == pytest.approx(2.0)
    assert wasserstein(square, square.dirac(0), square.dirac(0)) == 0.0


def test_coupling_marginals(cycle4, rng):
    a, b = random_interior(cycle4, rng, count=2)
    plan = optimal_coupling(cycle4, a, b)
    assert np.allclose(plan.sum(axis=1), cycle4.pi * a)
    assert np.allclose(plan.sum(axis=0), cycle4.pi * b)


def test_custom_metric_validation(square):
    with pytest.raises(ShapeMismatch):
        wasserstein(square, square.uniform(), square.uniform(), np.ones((4, 4)))
    with pytest.raises(ShapeMismatch):
        wasserstein(square, square.uniform(), square.uniform(), "hamming")
    with pytest.raises(ShapeMismatch):
        wasserstein(square, square.uniform(), square.uniform(), "graph", 3)


def test_min_rate(complete3, square):
    assert min_rate(complete3) == pytest.approx(1.0 / 3.0)
    assert min_rate(square) == pytest.approx(0.5)


@pytest.mark.parametrize("fixture", ["square", "cycle4", "complete3"])
def test_sandwich(fixture, request, rng):
    chain = request.getfixturevalue(fixture)
    a, b = random_interior(chain, rng, count=2, floor=0.1)
    solution = solve_W(chain, a, b, FAST)
    rows = {r["quantity"]: r["value"] for r in comparison_table(chain, a, b, FAST, solution)}
    w = rows["w_est"]
    assert rows["lower_tv"] <= rows["lower_w1"] + 1e-12
    assert rows["lower_w1"] <= w * (1 + 1e-3)
    assert w <= rows["upper_graph"] * (1 + 1e-2)
    assert rows["lower_tv"] == pytest.approx(rows["d_tv"] / math.sqrt(2.0))


def test_comparison_table_provenance(twopoint):
    rows = comparison_table(twopoint, [0.5, 1.5], [1.5, 0.5], SolverConfig(grid=8))
    provenance = {r["quantity"]: r["provenance"] for r in rows}
    assert provenance["w_est"] == "estimated"
    assert provenance["lower_w1"] == "certified"
    assert provenance["d_tv"] == "exact"


def test_dirac_bound_row(complete3):
    a = np.array([1.5, 1.2, 0.3])
    b = np.array([0.6, 0.9, 1.5])
    rows = comparison_table(complete3, a, b, SolverConfig(grid=8), with_dirac=True)
    quantities = [r["quantity"] for r in rows]
    assert quantities[-1] == "upper_dirac"
    values = {r["quantity"]: r["value"] for r in rows}
    assert values["w_est"] <= values["upper_dirac"] * (1 + 1e-2)
