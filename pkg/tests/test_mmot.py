import math
from itertools import product as iproduct

import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import A as E1
from conftest import two_point_closed_form
from mfot.costs import coulomb, coulomb_regularized, gaussian, truncated_quadratic
from mfot.measures import DiscreteMeasure, SupportGrid, marginal, product, tv_distance
from mfot.mmot import (
    BudgetExceeded,
    MmotProblem,
    density_to_measure,
    mean_field_value,
    sce_value,
    solve_mmot,
    solve_reduced,
)


def brute_force(mu, n, cost):
    """Dense N-marginal LP over all m^N tuples, each marginal pinned to ``mu``."""
    m = mu.grid.m
    L = cost.matrix(mu.grid)
    tuples = list(iproduct(range(m), repeat=n))
    c = np.array([sum(L[t[a], t[b]] for a in range(n) for b in range(a + 1, n)) for t in tuples])
    c /= math.comb(n, 2)
    rows = []
    for slot in range(n):
        for i in range(m):
            rows.append([1.0 if t[slot] == i else 0.0 for t in tuples])
    b = np.tile(mu.weights, n)
    res = linprog(c, A_eq=np.array(rows), b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


@pytest.mark.parametrize("n", range(2, 7))
def test_two_point_ladder_closed_form(uniform2, gauss, n):
    for form in ("direct", "reduced"):
        assert solve_mmot(MmotProblem(uniform2, n, gauss, form)).value == pytest.approx(
            two_point_closed_form(n), abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_matches_dense_brute_force(n, rng):
    g = SupportGrid.line([0.0, 0.7, 1.9])
    mu = DiscreteMeasure(g, rng.dirichlet(np.ones(3)))
    c = gaussian(0.8)
    ref = brute_force(mu, n, c)
    assert solve_mmot(MmotProblem(mu, n, c)).value == pytest.approx(ref, abs=1e-9)
    assert solve_mmot(MmotProblem(mu, n, c, "reduced")).value == pytest.approx(ref, abs=1e-9)


def test_formulations_agree_random(rng):
    for _ in range(6):
        m = int(rng.integers(2, 5))
        g = SupportGrid.line(np.sort(rng.random(m) * 3) + np.arange(m) * 1e-3)
        mu = DiscreteMeasure(g, rng.dirichlet(np.ones(m)))
        c = gaussian(float(rng.uniform(0.3, 2)))
        n = int(rng.integers(2, 7))
        d = solve_mmot(MmotProblem(mu, n, c)).value
        r = solve_mmot(MmotProblem(mu, n, c, "reduced")).value
        assert d == pytest.approx(r, abs=1e-9)


def test_optimal_measure_is_feasible(uniform2, gauss):
    rep = solve_mmot(MmotProblem(uniform2, 5, gauss))
    assert tv_distance(marginal(rep.measure, 1), uniform2) < 1e-9
    red = solve_reduced(uniform2, 5, gauss)
    assert tv_distance(marginal(red.witness, 2), red.measure) < 1e-9
    assert red.measure.symmetric


def test_monotone_and_below_mean_field(uniform2, gauss):
    vals = [solve_mmot(MmotProblem(uniform2, n, gauss)).value for n in range(2, 12)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert max(vals) < mean_field_value(uniform2, gauss)


def test_product_never_beats_optimum(rng, gauss):
    g = SupportGrid.line(np.arange(3.0))
    mu = DiscreteMeasure(g, rng.dirichlet(np.ones(3)))
    from mfot.costs import nbody_cost

    for n in (2, 3, 5):
        prod_cost = nbody_cost(gauss, product(mu, n)) / math.comb(n, 2)
        assert solve_mmot(MmotProblem(mu, n, gauss)).value <= prod_cost + 1e-12


def test_truncated_quadratic_diagonal(uniform2):
    c = truncated_quadratic(2.0)
    for n in range(2, 7):
        assert abs(solve_mmot(MmotProblem(uniform2, n, c)).value) <= 1e-12


def test_coulomb_on_atoms(uniform2):
    # two atoms, three particles: two must share a site
    assert solve_mmot(MmotProblem(uniform2, 3, coulomb())).value == math.inf
    assert solve_mmot(MmotProblem(uniform2, 2, coulomb())).value == pytest.approx(1.0)


def test_regularized_coulomb_formulations_agree():
    g = SupportGrid.line(np.arange(4.0))
    mu = DiscreteMeasure(g, np.full(4, 0.25))
    c = coulomb_regularized(0.25)
    for n in range(2, 9):
        assert solve_mmot(MmotProblem(mu, n, c)).value == pytest.approx(
            solve_mmot(MmotProblem(mu, n, c, "reduced")).value, abs=1e-9)
    # four particles on four sites: one per site
    ref = (3 * 1 + 2 * 0.5 + 1 / 3) / 6
    assert solve_mmot(MmotProblem(mu, 4, c)).value == pytest.approx(ref, abs=1e-12)


def test_budget(uniform2, gauss):
    with pytest.raises(BudgetExceeded, match="budget"):
        solve_mmot(MmotProblem(uniform2, 50, gauss), budget=10)
    with pytest.raises(BudgetExceeded):
        solve_reduced(uniform2, 50, gauss, budget=10)


def test_problem_validation(uniform2, gauss):
    with pytest.raises(ValueError):
        MmotProblem(uniform2, 1, gauss)
    with pytest.raises(ValueError):
        MmotProblem(uniform2, 3, gauss, "sideways")


def test_sce_scaling(two_points, gauss):
    v = sce_value(two_points, [2.0, 2.0], 4, gauss)
    assert v == pytest.approx(6 * (1 + 2 * E1) / 3)
    with pytest.raises(ValueError):
        density_to_measure(two_points, [1.0, 1.0], 4)
