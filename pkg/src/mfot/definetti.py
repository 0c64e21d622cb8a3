"""Finite de Finetti mixtures and the Diaconis-Freedman lift.

A :class:`Mixture` is a finitely supported law ``nu`` over one-body measures.
Its k-point marginal ``sum_a nu_a Q_a^{(x)k}`` is exchangeable for every k, so
mixtures are the computable stand-in for infinitely representable measures.

The lift of an exchangeable N-body measure mixes the empirical measures of its
configurations. Its 2-marginal differs from the original one by
``(gamma_2 - Delta gamma_1) / N``, so the distance over events is at most ``1/N``
(``2/N`` in the total-mass norm used by :func:`mfot.measures.tv_distance`).
"""
from dataclasses import dataclass

import numpy as np

from .measures import (
    TAU_NORM,
    DiscreteMeasure,
    NBodyMeasure,
    PairMeasure,
    _check_weights,
    _frozen,
    marginal,
    product,
    symmetrize,
    tv_distance,
)


@dataclass(frozen=True, eq=False)
class Mixture:
    """Weights ``nu`` over components ``Q`` (rows of ``components``) on one grid."""

    grid: object
    components: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.components, dtype=np.float64))
        nu = np.asarray(self.weights, dtype=np.float64).ravel()
        if Q.shape != (nu.size, self.grid.m):
            raise ValueError(f"components {Q.shape} do not match {nu.size} weights on {self.grid.m} points")
        _check_weights(nu, "Mixture")
        for q in Q:
            _check_weights(q, "Mixture component")
        object.__setattr__(self, "components", _frozen(Q))
        object.__setattr__(self, "weights", _frozen(nu))

    @classmethod
    def of(cls, measures, weights):
        measures = list(measures)
        grid = measures[0].grid
        if not all(q.grid.compatible(grid) for q in measures):
            raise ValueError("mixture components must share a grid")
        return cls(grid, np.stack([q.weights for q in measures]), weights)

    def component(self, a):
        return DiscreteMeasure(self.grid, self.components[a])

    @property
    def mean(self):
        return DiscreteMeasure(self.grid, self.weights @ self.components)


def mixture_pair_marginal(nu):
    """``sum_a nu_a Q_a (x) Q_a``; symmetric and infinitely representable."""
    Q = nu.components
    return PairMeasure(nu.grid, np.einsum("a,ai,aj->ij", nu.weights, Q, Q))


def mixture_marginal(nu, k):
    if k == 1:
        return nu.mean
    if k == 2:
        return mixture_pair_marginal(nu)
    w = sum(a * product(nu.component(i), k).weights for i, a in enumerate(nu.weights) if a > 0)
    return NBodyMeasure(nu.grid, k, w)


def _exchangeable(gamma):
    if gamma.mode == "multiset":
        return gamma
    if not gamma.is_exchangeable():
        raise ValueError("lift needs an exchangeable measure")
    return symmetrize(gamma)


def df_lift(gamma):
    """Mixture over the empirical measures of the configurations charged by ``gamma``."""
    gamma = _exchangeable(gamma)
    keep = gamma.weights > 0
    emp = gamma.counts[keep] / gamma.n
    return Mixture(gamma.grid, emp, gamma.weights[keep])


def df_lift_marginal(gamma, k):
    if k < 1:
        raise ValueError("k must be >= 1")
    return mixture_marginal(df_lift(gamma), k)


@dataclass(frozen=True)
class LiftBound:
    tv: float  # total-mass norm of gamma_2 - P_2
    event_tv: float  # sup over events, tv / 2
    bound: float  # 1 / N
    marginal_tv: float
    passed: bool


def df_tv_bound_check(gamma):
    """Compare the 2-marginal of ``gamma`` with that of its lift.

    Passes when the event distance is at most ``1/N`` and the 1-marginals agree.
    """
    gamma = _exchangeable(gamma)
    if gamma.n < 2:
        raise ValueError("need N >= 2")
    tv = tv_distance(marginal(gamma, 2), df_lift_marginal(gamma, 2))
    mtv = tv_distance(marginal(gamma, 1), df_lift_marginal(gamma, 1))
    bound = 1.0 / gamma.n
    ok = tv / 2 <= bound + TAU_NORM and mtv <= TAU_NORM
    return LiftBound(tv, tv / 2, bound, mtv, bool(ok))


def df_general_k_check(gamma, k):
    """Event distance between ``gamma_k`` and the lift's k-marginal against ``k(k-1)/N``.

    Diagnostic only; the bound is quoted from the literature, not guaranteed here.
    """
    gamma = _exchangeable(gamma)
    if not 1 <= k <= gamma.n:
        raise ValueError("need 1 <= k <= N")
    d = tv_distance(marginal(gamma, k), df_lift_marginal(gamma, k)) / 2
    return d, k * (k - 1) / gamma.n


def random_exchangeable(grid, n, rng, sparsity=None):
    """Dirichlet multiset weights, optionally restricted to a random subset of multisets."""
    from .multiset import n_multisets

    S = n_multisets(grid.m, n)
    w = rng.dirichlet(np.ones(S) * rng.uniform(0.2, 2.0))
    if sparsity:
        keep = rng.random(S) < sparsity
        keep[rng.integers(S)] = True
        w = np.where(keep, w, 0.0)
        w /= w.sum()
    return NBodyMeasure(grid, n, w)


def random_mixture(grid, n_components, rng, concentration=1.0):
    Q = rng.dirichlet(np.ones(grid.m) * concentration, size=n_components)
    return Mixture(grid, Q, rng.dirichlet(np.ones(n_components)))
