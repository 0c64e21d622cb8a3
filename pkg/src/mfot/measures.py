"""Discrete probability measures on finite point sets in R^d.

Three concrete types share one grid:

* :class:`DiscreteMeasure` - one-body weights ``w[i]``;
* :class:`PairMeasure` - an ``m x m`` weight matrix;
* :class:`NBodyMeasure` - N-body weights, either on all ``m**N`` tuples
  (``mode="dense"``) or on the ``C(m+N-1, N)`` size-N multisets
  (``mode="multiset"``). A multiset weight is the total mass of all orderings
  of that multiset, so the implied tuple measure is exchangeable.

All measures are immutable. Weights must be nonnegative and sum to one within
:data:`TAU_NORM`; nothing is renormalised behind the caller's back.
"""
from dataclasses import dataclass
from itertools import permutations
from math import comb, factorial

import numpy as np

from . import kernels
from .multiset import multinomial, multiset_counts, pair_index, rank_sorted

TAU_NORM = 1e-9
DENSE_LIMIT = 2_000_000


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


def _check_weights(w, what):
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{what}: weights must be finite")
    if np.any(w < 0):
        raise ValueError(f"{what}: negative weight {w.min()!r}")
    total = w.sum()
    if abs(total - 1.0) > TAU_NORM:
        raise ValueError(f"{what}: weights sum to {total!r}, not 1")


@dataclass(frozen=True, eq=False)
class SupportGrid:
    """Ordered distinct points in R^d, optionally on a periodic box ``[0, L)^d``.

    ``shape`` is set only for uniform tori built by :meth:`torus`; Fourier work
    requires it.
    """

    points: np.ndarray
    period: np.ndarray = None
    shape: tuple = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("grid needs at least one point of dimension >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("grid points must be distinct")
        per = None
        if self.period is not None:
            per = np.broadcast_to(np.asarray(self.period, dtype=np.float64), (pts.shape[1],))
            if np.any(per <= 0):
                raise ValueError("period must be positive")
            if np.any(pts < 0) or np.any(pts >= per):
                raise ValueError("periodic grid coordinates must lie in [0, L)")
            per = _frozen(per)
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "period", per)
        if self.shape is not None:
            object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    @classmethod
    def line(cls, coords):
        return cls(np.asarray(coords, dtype=np.float64).reshape(-1, 1))

    @classmethod
    def torus(cls, M, L, d=1):
        """Uniform grid ``{0, h, ..., (M-1)h}^d`` with ``h = L/M``, C-order flattening."""
        idx = np.indices((M,) * d).reshape(d, -1).T
        return cls(idx * (L / M), period=L, shape=(M,) * d)

    @property
    def m(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    @property
    def is_uniform_torus(self):
        return self.shape is not None and self.period is not None

    def compatible(self, other):
        if self is other:
            return True
        if not np.array_equal(self.points, other.points):
            return False
        if (self.period is None) != (other.period is None):
            return False
        return self.period is None or np.array_equal(self.period, other.period)

    def differences(self):
        """Pairwise differences ``x_i - x_j``, shape ``(m, m, d)``; minimum image if periodic."""
        diff = self.points[:, None, :] - self.points[None, :, :]
        if self.period is not None:
            diff = diff - self.period * np.round(diff / self.period)
        return diff


def _same_grid(a, b):
    if not a.grid.compatible(b.grid):
        raise ValueError("measures live on different grids")


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    grid: SupportGrid
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.shape != (self.grid.m,):
            raise ValueError(f"expected {self.grid.m} weights, got shape {w.shape}")
        _check_weights(w, "DiscreteMeasure")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, grid):
        return cls(grid, np.full(grid.m, 1.0 / grid.m))

    @classmethod
    def dirac(cls, grid, i):
        w = np.zeros(grid.m)
        w[i] = 1.0
        return cls(grid, w)

    @property
    def support(self):
        return np.flatnonzero(self.weights > 0)


@dataclass(frozen=True, eq=False)
class PairMeasure:
    grid: SupportGrid
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        m = self.grid.m
        if w.shape != (m, m):
            raise ValueError(f"expected ({m}, {m}) weights, got {w.shape}")
        _check_weights(w, "PairMeasure")
        object.__setattr__(self, "weights", w)

    @property
    def symmetric(self):
        return bool(np.array_equal(self.weights, self.weights.T))

    def multiset_weights(self):
        """Weights on the size-2 multisets ``{i, j}``, ``i <= j``, lexicographic."""
        I, J = pair_index(self.grid.m)
        w = self.weights
        return np.where(I == J, w[I, J], w[I, J] + w[J, I])

    @classmethod
    def from_multiset(cls, grid, p):
        I, J = pair_index(grid.m)
        w = np.zeros((grid.m, grid.m))
        off = I != J
        w[I[~off], J[~off]] = p[~off]
        w[I[off], J[off]] = 0.5 * p[off]
        w[J[off], I[off]] = 0.5 * p[off]
        return cls(grid, w)


@dataclass(frozen=True, eq=False)
class NBodyMeasure:
    grid: SupportGrid
    n: int
    weights: np.ndarray
    mode: str = "multiset"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("body count must be >= 1")
        m = self.grid.m
        if self.mode == "multiset":
            expect = (comb(m + self.n - 1, self.n),)
        elif self.mode == "dense":
            if m**self.n > DENSE_LIMIT:
                raise ValueError(f"dense storage of {m}**{self.n} tuples exceeds {DENSE_LIMIT}")
            expect = (m,) * self.n
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.size != int(np.prod(expect)):
            raise ValueError(f"expected {int(np.prod(expect))} weights for mode {self.mode}")
        w = _frozen(w.reshape(expect))
        _check_weights(w, "NBodyMeasure")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "n", int(self.n))

    @property
    def counts(self):
        return multiset_counts(self.grid.m, self.n)

    def to_dense(self):
        if self.mode == "dense":
            return self
        m, n = self.grid.m, self.n
        if m**n > DENSE_LIMIT:
            raise ValueError(f"dense expansion of {m}**{n} tuples exceeds {DENSE_LIMIT}")
        tuples = np.indices((m,) * n).reshape(n, -1).T
        r = rank_sorted(np.sort(tuples, axis=1), m)
        per_tuple = self.weights / multinomial(self.counts)
        return NBodyMeasure(self.grid, n, per_tuple[r].reshape((m,) * n), mode="dense")

    def is_exchangeable(self, rng=None, atol=1e-12, max_perms=720):
        """Symmetry check. Dense mode tests ``min(N!, max_perms)`` coordinate permutations."""
        if self.mode == "multiset":
            return True
        n = self.n
        if factorial(n) <= max_perms:
            perms = permutations(range(n))
        else:
            rng = np.random.default_rng(rng)
            perms = (rng.permutation(n) for _ in range(max_perms))
        w = self.weights
        return all(np.allclose(np.transpose(w, p), w, rtol=0, atol=atol) for p in perms)


# -- constructors -------------------------------------------------------------


def outer(mu, nu):
    _same_grid(mu, nu)
    return PairMeasure(mu.grid, np.outer(mu.weights, nu.weights))


def product(mu, n):
    """Multiset weights of ``mu^{(x)n}``: ``multinomial(k) * prod mu_i^k_i``."""
    if n < 2:
        raise ValueError("product needs N >= 2")
    K = multiset_counts(mu.grid.m, n)
    w = mu.weights
    with np.errstate(divide="ignore"):
        logw = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)), -np.inf)
    dead = ((K > 0) & (w == 0)[None, :]).any(axis=1)
    expo = (K * np.where(np.isfinite(logw), logw, 0.0)[None, :]).sum(axis=1)
    vals = np.where(dead, 0.0, multinomial(K) * np.exp(expo))
    return NBodyMeasure(mu.grid, n, vals)


def diagonal_pushforward(mu, k):
    if k < 2:
        raise ValueError("diagonal pushforward needs k >= 2")
    m = mu.grid.m
    K = multiset_counts(m, k)
    idx = rank_sorted(np.repeat(np.arange(m)[:, None], k, axis=1), m)
    w = np.zeros(K.shape[0])
    w[idx] = mu.weights
    return NBodyMeasure(mu.grid, k, w)


# -- projections ---------------------------------------------------------------


def _wrap(grid, k, weights, mode):
    if k == 1:
        return DiscreteMeasure(grid, weights)
    if k == 2 and mode == "dense":
        return PairMeasure(grid, weights)
    return NBodyMeasure(grid, k, weights, mode=mode)


def marginal(gamma, k, slots=None):
    """k-point marginal.

    Multiset input uses the hypergeometric sub-multiset law and returns a
    multiset measure (a :class:`PairMeasure` for ``k == 2``, a
    :class:`DiscreteMeasure` for ``k == 1``). Dense input keeps the coordinates
    in ``slots`` (default: the first k).
    """
    if isinstance(gamma, DiscreteMeasure):
        if k != 1:
            raise ValueError("one-body measure has only its 1-marginal")
        return gamma
    if isinstance(gamma, PairMeasure):
        if k == 2:
            return gamma
        if k == 1:
            return DiscreteMeasure(gamma.grid, gamma.weights.sum(axis=1))
        raise ValueError("k must be 1 or 2 for a pair measure")
    n = gamma.n
    if not 1 <= k <= n:
        raise ValueError(f"marginal order k={k} outside 1..{n}")
    grid = gamma.grid
    if gamma.mode == "dense":
        slots = tuple(range(k)) if slots is None else tuple(slots)
        drop = tuple(a for a in range(n) if a not in slots)
        w = gamma.weights.sum(axis=drop) if drop else gamma.weights
        w = np.transpose(w, np.argsort(np.argsort(slots)))
        return _wrap(grid, k, w, "dense")
    if k == n:
        return PairMeasure.from_multiset(grid, gamma.weights) if k == 2 else gamma
    m = grid.m
    coef = kernels.marginal_matrix(gamma.counts, multiset_counts(m, k), n, k)
    w = coef @ gamma.weights
    if k == 1:
        return DiscreteMeasure(grid, w)
    if k == 2:
        return PairMeasure.from_multiset(grid, w)
    return NBodyMeasure(grid, k, w)


def symmetrize(gamma):
    """Average over all coordinate permutations, returned in multiset mode."""
    if gamma.mode == "multiset":
        return gamma
    m, n = gamma.grid.m, gamma.n
    tuples = np.indices((m,) * n).reshape(n, -1).T
    r = rank_sorted(np.sort(tuples, axis=1), m)
    w = np.bincount(r, weights=gamma.weights.ravel(), minlength=comb(m + n - 1, n))
    return NBodyMeasure(gamma.grid, n, w)


# -- distances ----------------------------------------------------------------


def as_pair(x):
    if isinstance(x, PairMeasure):
        return x
    if isinstance(x, NBodyMeasure) and x.n == 2:
        return marginal(x.to_dense(), 2)
    raise ValueError("not a two-body measure")


def _arity(x):
    if isinstance(x, DiscreteMeasure):
        return 1
    if isinstance(x, PairMeasure):
        return 2
    return x.n


def tv_distance(a, b):
    """Total mass of the signed difference, ``sum_x |a(x) - b(x)|``.

    This is the supremum of ``|a(f) - b(f)|`` over ``|f| <= 1``; it is twice the
    largest difference over events.
    """
    _same_grid(a, b)
    if _arity(a) != _arity(b):
        raise ValueError(f"arity mismatch: {_arity(a)} vs {_arity(b)}")
    if _arity(a) == 2:
        a, b = as_pair(a), as_pair(b)
    elif isinstance(a, NBodyMeasure) and a.mode != b.mode:
        a, b = a.to_dense(), b.to_dense()
    return float(np.abs(a.weights - b.weights).sum())
