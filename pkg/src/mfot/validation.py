"""Cross-module invariant suite run by ``mfot validate``.

Every check is a small, seeded computation with an independent reference.
"""
import io
import time
from dataclasses import dataclass
from math import comb, exp

import numpy as np

from . import kernels
from .costs import classify_positive_definite, gaussian, truncated_quadratic
from .definetti import df_tv_bound_check, random_exchangeable, random_mixture
from .fourier import plancherel_bilinear, plancherel_quadratic, variance_decomposition
from .lp import LinearProgram, read_mps, solve, solve_exact, verify_farkas, write_mps
from .measures import DiscreteMeasure, SupportGrid, marginal, product, symmetrize, tv_distance
from .mmot import MmotProblem, mean_field_value, solve_mmot
from .representability import anticorrelated, is_n_representable, random_representable_pair


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def closed_form_two_point(n, a):
    """``F_N`` for two equal atoms with same-site cost 1 and cross cost ``a < 1``."""
    m = (n + 1) // 2
    return ((m - 1) + m * a) / (2 * m - 1)


def _lp_vs_exact(rng):
    worst = 0.0
    for _ in range(25):
        r, n = int(rng.integers(1, 4)), int(rng.integers(2, 6))
        A = rng.integers(-3, 4, size=(r, n)).astype(float)
        b = A @ rng.integers(0, 3, size=n) if rng.random() < 0.7 else rng.integers(-3, 4, size=r).astype(float)
        lp = LinearProgram.from_dense(rng.integers(0, 5, size=n).astype(float), A, b)
        fl, ex = solve(lp), solve_exact(lp)
        if fl.status != ex.status:
            return False, f"status {fl.status} vs exact {ex.status}"
        if fl.status == "optimal":
            worst = max(worst, abs(fl.objective - float(ex.objective)))
        elif fl.status == "infeasible" and not verify_farkas(lp.A, lp.b, fl.farkas):
            return False, "unverified Farkas certificate"
    return worst <= 1e-8, f"max objective difference {worst:.2e}"


def _mps_roundtrip(rng):
    A = rng.integers(-3, 4, size=(3, 5)).astype(float)
    lp = LinearProgram.from_dense(rng.normal(size=5), A, A @ rng.random(5))
    back = read_mps(write_mps(lp, io.StringIO()))
    ok = np.allclose(back.A.toarray(), lp.A.toarray()) and np.allclose(back.c, lp.c, rtol=1e-11) \
        and np.allclose(back.b, lp.b, rtol=1e-11)
    return ok, "write/read preserves c, A, b"


def _marginals(rng):
    g = SupportGrid.line(np.arange(3.0))
    worst = 0.0
    for _ in range(10):
        mu = DiscreteMeasure(g, rng.dirichlet(np.ones(3)))
        gam = product(mu, 4)
        worst = max(worst, tv_distance(marginal(gam, 1), mu))
        dense = random_exchangeable(g, 3, rng).to_dense()
        worst = max(worst, tv_distance(marginal(symmetrize(dense), 2), marginal(dense, 2)))
    return worst <= 1e-12, f"max marginal discrepancy {worst:.2e}"


def _ladder(rng):
    g = SupportGrid.line([0.0, 1.0])
    mu = DiscreteMeasure(g, [0.5, 0.5])
    c = gaussian(2 ** -0.5)
    worst = 0.0
    for n in range(2, 9):
        ref = closed_form_two_point(n, exp(-1))
        for form in ("direct", "reduced"):
            worst = max(worst, abs(solve_mmot(MmotProblem(mu, n, c, form)).value - ref))
    ok = worst <= 1e-8 and abs(mean_field_value(mu, c) - (1 + exp(-1)) / 2) < 1e-15
    return ok, f"max deviation from closed form {worst:.2e}"


def _representability(rng):
    g = SupportGrid.line([0.0, 1.0])
    a = anticorrelated(g)
    r2, r3 = is_n_representable(a, 2), is_n_representable(a, 3)
    if not (r2.feasible and not r3.feasible and r3.certificate_verified):
        return False, "anticorrelated pair measure misclassified"
    g3 = SupportGrid.line(np.arange(3.0))
    for _ in range(5):
        k = int(rng.integers(3, 6))
        mu2 = random_representable_pair(g3, k, rng)
        for j in range(2, k + 1):
            if not is_n_representable(mu2, j).feasible:
                return False, f"{k}-representable pair rejected at {j}"
    return True, "anticorrelated: feasible at 2, certified infeasible at 3; monotone on random pairs"


def _lift(rng):
    g = SupportGrid.line(np.arange(4.0))
    for _ in range(30):
        gam = random_exchangeable(g, int(rng.integers(2, 8)), rng, sparsity=0.4)
        if not df_tv_bound_check(gam).passed:
            return False, "lift bound violated"
    u = df_tv_bound_check(product(DiscreteMeasure(SupportGrid.line([0.0, 1.0]), [0.5, 0.5]), 3))
    return abs(u.tv - 1 / 3) <= 1e-12, f"uniform 3-fold product: tv {u.tv!r}"


def _fourier(rng):
    g = SupportGrid.torus(16, 8.0)
    worst = 0.0
    for _ in range(20):
        c = gaussian(float(rng.uniform(0.3, 1.5)))
        q, r = (DiscreteMeasure(g, rng.dirichlet(np.ones(g.m))) for _ in range(2))
        for chk in (plancherel_quadratic(c, q), plancherel_bilinear(c, q, r)):
            worst = max(worst, chk.relative_error)
        dec = variance_decomposition(random_mixture(g, int(rng.integers(1, 6)), rng), c)
        worst = max(worst, dec.identity_error, abs(dec.mean_field - dec.mean_field_spectral))
        if classify_positive_definite(c, g).label != "indefinite" and dec.variance_term < -1e-12:
            return False, "negative variance under a nonnegative spectrum"
    return worst <= 1e-10, f"max identity error {worst:.2e}"


def _counterexample(rng):
    g = SupportGrid.line([0.0, 1.0])
    mu = DiscreteMeasure(g, [0.5, 0.5])
    c = truncated_quadratic(2.0)
    fs = [solve_mmot(MmotProblem(mu, n, c)).value for n in range(2, 5)]
    mf = mean_field_value(mu, c)
    ref = (exp(-1 / 8) - exp(-2)) / 2
    ind = classify_positive_definite(c, SupportGrid.torus(64, 16.0)).label == "indefinite"
    return max(map(abs, fs)) <= 1e-9 and abs(mf - ref) < 1e-12 and ind, f"F_N max {max(fs):.1e}, mean field {mf:.6f}"


def _kernels(rng):
    K = np.array([[2, 1, 0], [0, 3, 0], [1, 1, 1]], dtype=np.int64)
    L = rng.random((3, 3))
    L = L + L.T
    a = kernels.pair_sums_nb(K, L)
    b = kernels.pair_sums_np(K, L)
    ref = np.array([comb(2, 2) * L[0, 0] + 2 * L[0, 1], 3 * L[1, 1], L[0, 1] + L[0, 2] + L[1, 2]])
    return np.allclose(a, ref) and np.allclose(b, ref), "pair-sum kernels agree with hand counts"


CHECKS = [
    ("lp_matches_exact", _lp_vs_exact),
    ("mps_roundtrip", _mps_roundtrip),
    ("marginal_consistency", _marginals),
    ("two_point_ladder", _ladder),
    ("representability", _representability),
    ("lift_bound", _lift),
    ("fourier_identities", _fourier),
    ("counterexample", _counterexample),
    ("kernel_backends", _kernels),
]


def run_validation(seed=0, only=None):
    out = []
    for name, fn in CHECKS:
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, len(out)])
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as err:  # a crash is a violation, reported with its message
            ok, detail = False, f"{type(err).__name__}: {err}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
