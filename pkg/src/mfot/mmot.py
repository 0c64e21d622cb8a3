"""Symmetric N-marginal optimal transport with a pair cost.

``F_N[mu]`` is the least value of ``C(N,2)^-1 * sum_{a<b} c(x_a, x_b)`` over
exchangeable N-body measures with one-body marginal ``mu``. Two LP
formulations are provided and must agree:

* ``direct`` - variables are multiset weights of the N-body measure;
* ``reduced`` - variables are a symmetric pair measure plus an N-body measure
  whose 2-marginal it must equal, i.e. the pair measure is constrained to be
  N-representable and the objective only sees the pair measure.
"""
import time
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp

from . import kernels
from .costs import multiset_pair_sums, pair_cost_integral
from .lp import DEFAULT_TOL, LinearProgram, solve
from .measures import DiscreteMeasure, NBodyMeasure, PairMeasure, outer
from .multiset import multiset_counts, n_multisets, pair_index

DEFAULT_BUDGET = 2_000_000


class BudgetExceeded(ValueError):
    pass


def check_budget(nvars, budget, what):
    if nvars > budget:
        raise BudgetExceeded(
            f"{what} needs {nvars} LP variables, over the budget of {budget}; "
            "use fewer support points or a smaller N"
        )


@dataclass(frozen=True, eq=False)
class MmotProblem:
    mu: DiscreteMeasure
    n: int
    cost: object
    formulation: str = "direct"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("N must be at least 2")
        if self.formulation not in ("direct", "reduced"):
            raise ValueError(f"unknown formulation {self.formulation!r}")


@dataclass
class SolveReport:
    value: float
    n: int
    formulation: str
    measure: object = None
    witness: object = None
    status: str = "optimal"
    lp_stats: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def sce(self):
        return comb(self.n, 2) * self.value


def _stats(res, A):
    return {
        "rows": int(A.shape[0]),
        "cols": int(A.shape[1]),
        "nnz": int(A.nnz),
        "iterations": int(res.iterations),
        "pivot_rule": res.pivot_rule,
        "residual": float(res.residual),
        "gap": float(res.gap),
    }


def _clean(x):
    return np.where(x > 0, x, 0.0)


def direct_lp(mu, n, cost):
    m = mu.grid.m
    K = multiset_counts(m, n)
    A = sp.csc_matrix(K.T.astype(np.float64) / n)
    c = multiset_pair_sums(cost, mu.grid, n) / comb(n, 2)
    return LinearProgram(c, A, mu.weights, name=f"MMOTN{n}")


def reduced_lp(mu, n, cost):
    m = mu.grid.m
    I, J = pair_index(m)
    P = I.size
    S = n_multisets(m, n)
    # one-body marginal of the pair measure: p_ij sends half to each end;
    # for i == j the two halves land in the same row and are summed
    rows = np.concatenate([I, J])
    cols = np.concatenate([np.arange(P), np.arange(P)])
    M1 = sp.csc_matrix((np.full(2 * P, 0.5), (rows, cols)), shape=(m, P))
    link = kernels.marginal_matrix(multiset_counts(m, n), multiset_counts(m, 2), n, 2)
    A = sp.vstack(
        [
            sp.hstack([M1, sp.csc_matrix((m, S))]),
            sp.hstack([sp.identity(P), -sp.csc_matrix(link)]),
        ],
        format="csc",
    )
    b = np.concatenate([mu.weights, np.zeros(P)])
    L = cost.matrix(mu.grid)
    c = np.concatenate([L[I, J], np.zeros(S)])
    return LinearProgram(c, A, b, name=f"REDN{n}")


def solve_mmot(problem, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL):
    """Optimal pair-normalised cost ``F_N`` and an optimal exchangeable measure."""
    if problem.formulation == "reduced":
        return solve_reduced(problem.mu, problem.n, problem.cost, budget=budget, tol=tol)
    mu, n, cost = problem.mu, problem.n, problem.cost
    check_budget(n_multisets(mu.grid.m, n), budget, f"direct N={n} on {mu.grid.m} points")
    t0 = time.perf_counter()
    lp = direct_lp(mu, n, cost)
    res = solve(lp, tol=tol)
    wall = time.perf_counter() - t0
    if res.status == "infeasible":
        # only possible when infinite-cost configurations were removed
        return SolveReport(float("inf"), n, "direct", status="infinite",
                           lp_stats=_stats(res, lp.A), wall_time=wall)
    if res.status != "optimal":
        raise RuntimeError(f"direct MMOT LP ended with status {res.status}")
    gamma = NBodyMeasure(mu.grid, n, _clean(res.x))
    return SolveReport(res.objective, n, "direct", measure=gamma, lp_stats=_stats(res, lp.A),
                       wall_time=wall)


def solve_reduced(mu, n, cost, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL):
    """Minimise ``int c d mu2`` over N-representable symmetric pair measures with marginal ``mu``."""
    if n < 2:
        raise ValueError("N must be at least 2")
    m = mu.grid.m
    P = m * (m + 1) // 2
    check_budget(n_multisets(m, n) + P, budget, f"reduced N={n} on {m} points")
    t0 = time.perf_counter()
    lp = reduced_lp(mu, n, cost)
    res = solve(lp, tol=tol, scale_rows=True)
    wall = time.perf_counter() - t0
    if res.status == "infeasible":
        return SolveReport(float("inf"), n, "reduced", status="infinite",
                           lp_stats=_stats(res, lp.A), wall_time=wall)
    if res.status != "optimal":
        raise RuntimeError(f"reduced MMOT LP ended with status {res.status}")
    x = _clean(res.x)
    mu2 = PairMeasure.from_multiset(mu.grid, x[:P])
    witness = NBodyMeasure(mu.grid, n, x[P:])
    return SolveReport(res.objective, n, "reduced", measure=mu2, witness=witness,
                       lp_stats=_stats(res, lp.A), wall_time=wall)


def mean_field_value(mu, cost):
    """``int int c dmu dmu``; may be ``+inf`` for singular costs on atoms."""
    return pair_cost_integral(cost, outer(mu, mu))


def density_to_measure(grid, rho, n):
    rho = np.asarray(rho, dtype=np.float64)
    if abs(rho.sum() - n) > 1e-9 * n:
        raise ValueError(f"density integrates to {rho.sum()!r}, expected N={n}")
    return DiscreteMeasure(grid, rho / n)


def sce_value(grid, rho, n, cost, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL):
    """``C(N,2) * F_N[rho / N]`` for a density ``rho`` of total mass ``N`` on ``grid``."""
    mu = density_to_measure(grid, rho, n)
    return comb(n, 2) * solve_mmot(MmotProblem(mu, n, cost), budget, tol).value
