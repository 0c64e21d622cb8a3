"""N-representability of symmetric pair measures.

A symmetric pair measure ``mu2`` is N-representable when it is the 2-marginal
of an exchangeable N-body measure. Deciding this is an LP feasibility problem
over multiset weights; the answer carries a witness or a Farkas certificate.
"""
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp

from . import kernels
from .lp import DEFAULT_TOL, LinearProgram, solve, verify_farkas
from .measures import NBodyMeasure, PairMeasure, as_pair, marginal, tv_distance
from .mmot import DEFAULT_BUDGET, check_budget, solve_reduced
from .multiset import multiset_counts, n_multisets


@dataclass
class RepresentabilityAnswer:
    feasible: bool
    n: int
    witness: NBodyMeasure = None
    certificate: np.ndarray = None
    certificate_verified: bool = False
    numerically_marginal: bool = False
    farkas_margin: float = None
    residual: float = None
    info: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "feasible" if self.feasible else "infeasible"


def _check_symmetric(mu2):
    mu2 = as_pair(mu2)
    if not np.allclose(mu2.weights, mu2.weights.T, rtol=0, atol=1e-14):
        raise ValueError("pair measure must be symmetric")
    return mu2


def representability_lp(mu2, n):
    """Rows: size-2 multisets ``{i, j}``. Columns: size-n multisets. ``A w = p``."""
    m = mu2.grid.m
    A = kernels.marginal_matrix(multiset_counts(m, n), multiset_counts(m, 2), n, 2)
    return LinearProgram(np.zeros(A.shape[1]), sp.csc_matrix(A), mu2.multiset_weights(),
                         name=f"REPN{n}")


def is_n_representable(mu2, n, tol=DEFAULT_TOL, budget=DEFAULT_BUDGET):
    if n < 2:
        raise ValueError("N must be at least 2")
    mu2 = _check_symmetric(mu2)
    check_budget(n_multisets(mu2.grid.m, n), budget, f"{n}-representability on {mu2.grid.m} points")
    lp = representability_lp(mu2, n)
    res = solve(lp, tol=tol, scale_rows=True)
    if res.status == "optimal":
        w = np.where(res.x > 0, res.x, 0.0)
        witness = NBodyMeasure(mu2.grid, n, w)
        err = float(np.abs(marginal(witness, 2).weights - mu2.weights).max())
        return RepresentabilityAnswer(True, n, witness=witness, residual=err,
                                      info={"iterations": res.iterations})
    y = res.farkas
    ok = verify_farkas(lp.A, lp.b, y, tol)
    return RepresentabilityAnswer(
        False,
        n,
        certificate=y,
        certificate_verified=ok,
        numerically_marginal=res.marginal or res.farkas_margin < 10 * tol.farkas,
        farkas_margin=res.farkas_margin,
        info={"iterations": res.iterations, "pivot_rule": res.pivot_rule},
    )


@dataclass(frozen=True)
class MonotonicityVerdict:
    n: int
    m: int
    n_representable: bool
    m_representable: bool

    @property
    def holds(self):
        return not (self.n_representable and not self.m_representable)


def monotonicity_check(mu2, n, m, **kw):
    """N-representable implies M-representable for ``M <= N``; returns both verdicts."""
    if not 2 <= m <= n:
        raise ValueError("need 2 <= M <= N")
    v = MonotonicityVerdict(n, m, is_n_representable(mu2, n, **kw).feasible,
                            is_n_representable(mu2, m, **kw).feasible)
    if not v.holds:
        raise AssertionError(f"{n}-representable but not {m}-representable: LP inconsistency")
    return v


@dataclass
class ProbeVerdict:
    verdict: str  # "representable_up_to_k_max" | "refuted_at_k"
    k: int
    answers: list = field(default_factory=list)


def infinite_representability_probe(mu2, k_max, **kw):
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    answers = []
    for k in range(2, k_max + 1):
        a = is_n_representable(mu2, k, **kw)
        answers.append(a)
        if not a.feasible:
            return ProbeVerdict("refuted_at_k", k, answers)
    return ProbeVerdict("representable_up_to_k_max", k_max, answers)


def hierarchy_value(mu, n, k, cost, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL):
    """``C(N,2) * min int c dmu2`` over k-representable ``mu2`` with marginal ``mu``; any ``k >= 2``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    return comb(n, 2) * solve_reduced(mu, k, cost, budget=budget, tol=tol).value


def random_representable_pair(grid, k, rng):
    """2-marginal of a random exchangeable k-body measure (Dirichlet multiset weights)."""
    w = rng.dirichlet(np.ones(n_multisets(grid.m, k)))
    return marginal(NBodyMeasure(grid, k, w), 2)


def anticorrelated(grid, a=0, b=1):
    w = np.zeros((grid.m, grid.m))
    w[a, b] = w[b, a] = 0.5
    return PairMeasure(grid, w)


__all__ = [
    "RepresentabilityAnswer",
    "anticorrelated",
    "hierarchy_value",
    "infinite_representability_probe",
    "is_n_representable",
    "monotonicity_check",
    "random_representable_pair",
    "representability_lp",
    "tv_distance",
]
