"""Exact two-phase tableau simplex over ``fractions.Fraction`` with Bland's rule.

Meant as an oracle for small instances. Float inputs are converted exactly
(every double is a dyadic rational).
"""
from fractions import Fraction

import numpy as np

from .model import LpResult, SizeLimitExceeded

MAX_VARS = 5000


def _frac(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def _pivot(T, obj, basis, p, q):
    row = T[p]
    piv = row[q]
    if piv != 1:
        T[p] = row = [v / piv for v in row]
    for i, other in enumerate(T):
        if i != p and other[q] != 0:
            f = other[q]
            T[i] = [a - f * b for a, b in zip(other, row)]
    if obj[q] != 0:
        f = obj[q]
        obj[:] = [a - f * b for a, b in zip(obj, row)]
    basis[p] = q


def _run(T, obj, basis, allowed):
    """Bland's rule until no allowed column has a negative reduced cost."""
    iters = 0
    ncol = len(obj) - 1
    while True:
        q = next((j for j in range(ncol) if allowed[j] and obj[j] < 0), None)
        if q is None:
            return "optimal", iters
        best = None
        for i, row in enumerate(T):
            if row[q] > 0:
                ratio = row[-1] / row[q]
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded", iters
        _pivot(T, obj, basis, best[1], q)
        iters += 1


def solve_exact(lp=None, *, c=None, A=None, b=None, max_vars=MAX_VARS):
    """Exact optimum of ``min c.x, Ax = b, x >= 0``.

    Pass a :class:`LinearProgram` or rational ``c``, ``A`` (dense rows), ``b``.
    ``+inf`` objective entries fix their variables at zero.
    """
    if lp is not None:
        c = list(lp.c)
        A = lp.A.toarray().tolist()
        b = list(lp.b)
    n_total = len(c)
    if n_total > max_vars:
        raise SizeLimitExceeded(f"{n_total} variables exceed the exact-solver limit {max_vars}")
    keep = [j for j in range(n_total) if not (isinstance(c[j], float) and c[j] == np.inf)]
    cc = [_frac(c[j]) for j in keep]
    r, n = len(b), len(keep)
    sign = []
    T = []
    for i in range(r):
        bi = _frac(b[i])
        s = -1 if bi < 0 else 1
        sign.append(s)
        row = [s * _frac(A[i][j]) for j in keep]
        row += [Fraction(1) if k == i else Fraction(0) for k in range(r)]
        row.append(s * bi)
        T.append(row)
    basis = list(range(n, n + r))
    ncol = n + r

    # phase I: reduced costs of sum(artificials)
    obj = [Fraction(0)] * (ncol + 1)
    for j in range(ncol + 1):
        if n <= j < ncol:
            continue
        obj[j] = -sum(row[j] for row in T)
    iters = 0
    _, k = _run(T, obj, basis, [True] * ncol)
    iters += k
    if -obj[-1] > 0:
        # y_i = 1 - reduced cost of artificial i, mapped back through the row flip
        y = [sign[i] * (1 - obj[n + i]) for i in range(r)]
        margin = sum(_frac(b[i]) * y[i] for i in range(r))
        return LpResult("infeasible", farkas=y, farkas_margin=margin, iterations=iters,
                        pivot_rule="bland", exact=True)

    for p in range(r):
        if basis[p] >= n:
            q = next((j for j in range(n) if T[p][j] != 0 and j not in basis), None)
            if q is not None:
                _pivot(T, obj, basis, p, q)

    obj = [Fraction(0)] * (ncol + 1)
    for j in range(n):
        obj[j] = cc[j]
    for i, bi in enumerate(basis):
        cb = cc[bi] if bi < n else Fraction(0)
        if cb != 0:
            obj = [a - cb * v for a, v in zip(obj, T[i])]
    status, k = _run(T, obj, basis, [j < n for j in range(ncol)])
    iters += k
    if status == "unbounded":
        return LpResult("unbounded", iterations=iters, pivot_rule="bland", exact=True)
    x = [Fraction(0)] * n_total
    for i, bi in enumerate(basis):
        if bi < n:
            x[keep[bi]] = T[i][-1]
    value = sum(cc[j] * x[keep[j]] for j in range(n))
    y = [sign[i] * (-obj[n + i]) for i in range(r)]
    return LpResult("optimal", x=x, objective=value, y=y, iterations=iters,
                    pivot_rule="bland", exact=True)
