"""Two-phase revised simplex in double precision.

Pricing is steepest edge with Goldfarb-Reid weight updates. After
``STALL_LIMIT`` consecutive degenerate pivots the phase switches permanently to
Bland's rule, which cannot cycle. The basis inverse is kept explicitly and
rebuilt from an LU factorisation every ``REFACTOR_EVERY`` pivots.
"""
import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .. import kernels
from .model import DEFAULT_TOL, LpResult, NumericalBreakdown

STALL_LIMIT = 50
REFACTOR_EVERY = 50
PIV_TOL = 1e-9
DUAL_TOL = 1e-10
DRIFT_TOL = 1e-10


class _Tableau:
    def __init__(self, A, b, n_struct):
        A = sp.csc_matrix(A)
        self.indptr = A.indptr.astype(np.int64)
        self.indices = A.indices.astype(np.int64)
        self.data = A.data.astype(np.float64)
        self.r, self.ncol = A.shape
        self.n_struct = n_struct
        self.b = b
        self.basis = np.arange(n_struct, n_struct + self.r)
        self.nonbasic = np.ones(self.ncol, dtype=bool)
        self.nonbasic[self.basis] = False
        self.Binv = np.eye(self.r)
        self.xB = b.copy()
        sq = np.bincount(
            np.repeat(np.arange(self.ncol), np.diff(self.indptr)),
            weights=self.data**2,
            minlength=self.ncol,
        )
        self.gamma = 1.0 + sq
        self.iterations = 0
        self.since_refactor = 0

    def column(self, j):
        v = np.zeros(self.r)
        s, e = self.indptr[j], self.indptr[j + 1]
        v[self.indices[s:e]] = self.data[s:e]
        return v

    def tdot(self, v):
        return kernels.csc_tdot(self.indptr, self.indices, self.data, v)

    def refactor(self):
        B = np.column_stack([self.column(j) for j in self.basis])
        try:
            lu = la.lu_factor(B, check_finite=True)
        except (ValueError, la.LinAlgError) as e:
            raise NumericalBreakdown(f"basis factorisation failed: {e}") from None
        if np.min(np.abs(np.diag(lu[0]))) < 1e-14:
            raise NumericalBreakdown("singular basis")
        self.Binv = la.lu_solve(lu, np.eye(self.r))
        self.xB = self.Binv @ self.b
        self.since_refactor = 0

    def pivot(self, q, p, alpha):
        """Basis change: column ``q`` enters at row ``p``. ``alpha = B^-1 a_q``."""
        apq = alpha[p]
        gamma_q = 1.0 + float(alpha @ alpha)
        w = self.Binv.T @ alpha
        rho = self.Binv[p].copy()
        leaving = self.basis[p]
        self.nonbasic[q] = False
        kernels.se_update(
            self.indptr, self.indices, self.data, rho, w, self.gamma, self.nonbasic, apq, gamma_q
        )
        self.gamma[leaving] = max(gamma_q / (apq * apq), 1.0)
        theta = self.xB[p] / apq
        self.xB -= theta * alpha
        self.xB[p] = theta
        self.Binv[p] /= apq
        col = alpha.copy()
        col[p] = 0.0
        self.Binv -= np.outer(col, self.Binv[p])
        self.basis[p] = q
        self.nonbasic[leaving] = True
        self.iterations += 1
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def run(self, cost, allowed, keep_zero, max_iter, dual_tol):
        """Minimise ``cost`` from the current feasible basis.

        ``keep_zero[j]`` marks columns that must stay at zero if basic (phase-II
        artificials); they leave with step zero whenever the entering column
        touches their row.
        """
        bland = False
        degenerate = 0
        verified = False
        while True:
            if self.iterations > max_iter:
                raise NumericalBreakdown(f"iteration limit {max_iter} reached")
            y = self.Binv.T @ cost[self.basis]
            d = cost - self.tdot(y)
            cand = np.flatnonzero(self.nonbasic & allowed & (d < -dual_tol))
            if cand.size == 0:
                if verified or self.since_refactor == 0:
                    return "optimal", bland
                self.refactor()
                verified = True
                continue
            verified = False
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(d[cand] ** 2 / self.gamma[cand])])
            alpha = self.Binv @ self.column(q)
            tol = PIV_TOL * max(1.0, float(np.abs(alpha).max()))
            stuck = np.flatnonzero(keep_zero[self.basis] & (np.abs(alpha) > tol))
            if stuck.size:
                p = int(stuck[np.argmax(np.abs(alpha[stuck]))])
                self.xB[p] = 0.0
                self.pivot(q, p, alpha)
                degenerate += 1
                continue
            rows = np.flatnonzero(alpha > tol)
            if rows.size == 0:
                return "unbounded", bland
            xb = np.maximum(self.xB[rows], 0.0)
            if bland:
                ratios = xb / alpha[rows]
                tmin = ratios.min()
                ties = rows[ratios <= tmin + 1e-12 * max(1.0, tmin)]
                p = int(ties[np.argmin(self.basis[ties])])
            else:
                # Harris-style two pass: relax, then take the largest pivot among near-ties
                bound = ((xb + DRIFT_TOL) / alpha[rows]).min()
                ok = rows[xb / alpha[rows] <= bound]
                p = int(ok[np.argmax(alpha[ok])])
            if self.xB[p] < 0:
                self.xB[p] = 0.0
            theta = self.xB[p] / alpha[p]
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            if degenerate > STALL_LIMIT:
                bland = True
            self.pivot(q, p, alpha)


def solve(lp, tol=DEFAULT_TOL, scale_rows=False, max_iter=None):
    """Solve ``lp``; see :class:`mfot.lp.model.LpResult` for the certificate contract."""
    c_full = lp.c
    keep = np.flatnonzero(np.isfinite(c_full))
    A0 = lp.A[:, keep]
    b0 = lp.b
    r, n = A0.shape
    n_total = lp.A.shape[1]

    scale = np.ones(r)
    if scale_rows:
        norms = np.sqrt(np.asarray(A0.multiply(A0).sum(axis=1)).ravel())
        scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)
    sign = np.where(scale * b0 < 0, -1.0, 1.0)
    D = sp.diags(scale * sign)
    As = sp.csc_matrix(D @ A0)
    bs = np.abs(scale * b0)
    c = c_full[keep]

    if max_iter is None:
        max_iter = 50 * (r + n) + 1000

    def unscale(yv):
        return scale * sign * yv

    if n == 0:
        # every column has infinite cost
        if np.abs(b0).max() <= tol.feas:
            return LpResult("optimal", np.zeros(n_total), 0.0, np.zeros(r))
        y = b0 / np.abs(b0).max()
        return _infeasible(A0, b0, y, tol, 0, "steepest_edge")

    aug = sp.hstack([As, sp.identity(r, format="csc")], format="csc")
    T = _Tableau(aug, bs, n)
    structural = np.zeros(n + r, dtype=bool)
    structural[:n] = True

    # phase I
    cost1 = np.concatenate([np.zeros(n), np.ones(r)])
    _, bland1 = T.run(cost1, np.ones(n + r, dtype=bool), np.zeros(n + r, dtype=bool), max_iter, DUAL_TOL)
    T.refactor()
    art = T.basis >= n
    phase1 = float(np.maximum(T.xB[art], 0.0).sum())
    if phase1 > tol.feas:
        y = unscale(T.Binv.T @ cost1[T.basis])
        return _infeasible(A0, b0, y, tol, T.iterations, "bland" if bland1 else "steepest_edge")

    # drive basic artificials out where a structural column can replace them
    for p in np.flatnonzero(T.basis >= n):
        row = T.tdot(T.Binv[p])
        row[~(structural & T.nonbasic)] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-9:
            alpha = T.Binv @ T.column(j)
            T.xB[p] = 0.0
            T.pivot(j, p, alpha)
    T.refactor()

    # phase II
    cmax = max(1.0, float(np.abs(c).max()))
    cost2 = np.concatenate([c, np.zeros(r)])
    status, bland2 = T.run(cost2, structural, ~structural, max_iter, DUAL_TOL * cmax)
    rule = "bland" if (bland1 or bland2) else "steepest_edge"
    if status == "unbounded":
        return LpResult("unbounded", iterations=T.iterations, pivot_rule=rule)
    T.refactor()

    xB = T.xB.copy()
    if np.any(xB < -tol.feas):
        raise NumericalBreakdown(f"primal infeasibility {xB.min():.3e} after refactorisation")
    xB = np.maximum(xB, 0.0)
    x = np.zeros(n_total)
    sb = T.basis < n
    x[keep[T.basis[sb]]] = xB[sb]
    obj = float(c_full[keep] @ x[keep])
    y = unscale(T.Binv.T @ cost2[T.basis])
    residual = float(np.abs(lp.A @ x - b0).max())
    gap = abs(obj - float(b0 @ y))
    dual_inf = float(max(0.0, -(c - A0.T @ y).min()))
    bscale = max(1.0, float(np.abs(b0).max()))
    if residual > tol.feas * bscale:
        raise NumericalBreakdown(f"primal residual {residual:.3e} exceeds {tol.feas:g}")
    if gap > tol.gap * max(1.0, abs(obj)):
        raise NumericalBreakdown(f"duality gap {gap:.3e} exceeds {tol.gap:g}")
    return LpResult(
        "optimal",
        x=x,
        objective=obj,
        y=y,
        iterations=T.iterations,
        residual=residual,
        gap=gap,
        pivot_rule=rule,
        info={"dual_infeasibility": dual_inf, "rows": r, "cols": n, "dropped": n_total - n},
    )


def _infeasible(A0, b0, y, tol, iterations, rule):
    # phase-I duals: y.A <= 0 and y.b equals the phase-I optimum > 0
    s = float(np.abs(y).max())
    y = y / s if s > 0 else y
    margin = float(b0 @ y)
    viol = float((A0.T @ y).max()) if A0.shape[1] else 0.0
    return LpResult(
        "infeasible",
        farkas=y,
        iterations=iterations,
        farkas_margin=margin,
        marginal=margin < 10 * tol.farkas or viol > tol.feas,
        pivot_rule=rule,
        info={"farkas_violation": viol},
    )
