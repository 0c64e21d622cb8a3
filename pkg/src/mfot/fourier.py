"""Fourier analysis of pair costs and mixtures on a uniform periodic grid.

Conventions on the torus ``[0, L)^d`` with ``M`` points per axis, ``h = L/M``:

* grid functions: ``f_hat(k) = h^d * sum_x exp(-i k.x) f(x)`` with ``k = 2 pi n / L``;
  the inverse is ``f(x) = L^-d * sum_k exp(i k.x) f_hat(k)``;
* measures: ``Q_hat(k) = sum_x exp(-i k.x) Q(x)`` (no quadrature weight, the
  weights already are masses).

With these choices the Plancherel identity reads

    sum_{x,y} l(x - y) Q(x) R(y) = L^-d * sum_k l_hat(k) conj(Q_hat(k)) R_hat(k)

exactly, so ``L^-d`` replaces the continuum constant ``(2 pi)^-d``.

The cost enters as a function on the cyclic group: ``l`` is sampled once at
the minimum-image offsets (see :func:`mfot.costs.sample_on_torus`) and
``l(x - y)`` is then read with indices taken modulo ``M``.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .costs import classify_positive_definite, sample_on_torus
from .definetti import Mixture, mixture_pair_marginal
from .measures import DiscreteMeasure, tv_distance


def _require_torus(grid):
    if not grid.is_uniform_torus:
        raise ValueError("Fourier analysis needs a uniform periodic grid (SupportGrid.torus)")


def _cell(grid):
    return float(np.prod(grid.period / np.asarray(grid.shape)))


def _volume(grid):
    return float(np.prod(grid.period))


@dataclass(frozen=True, eq=False)
class TorusSpectrum:
    grid: object
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _require_torus(self.grid)
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise ValueError(f"spectrum shape {v.shape} does not match grid {self.grid.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def wavenumbers(self):
        """``2 pi n / L`` per axis, numpy's FFT ordering, shape ``(*grid.shape, d)``."""
        axes = [2 * np.pi * np.fft.fftfreq(M, d=1.0 / M) / L for M, L in zip(self.grid.shape, self.grid.period)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @property
    def is_real(self):
        scale = float(np.abs(self.values).max()) or 1.0
        return float(np.abs(self.values.imag).max()) <= 1e-12 * scale

    def to_csv(self, path):
        """One row per frequency: integer index per axis, wavenumber per axis, real, imag."""
        d = self.grid.d
        idx = np.indices(self.grid.shape).reshape(d, -1).T
        k = self.wavenumbers().reshape(-1, d)
        vals = self.values.ravel()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow([f"n{a}" for a in range(d)] + [f"k{a}" for a in range(d)] + ["real", "imag"])
            for i in range(vals.size):
                w.writerow([*idx[i].tolist(), *map(repr, k[i].tolist()), repr(vals[i].real), repr(vals[i].imag)])


def dft(grid, f):
    """Forward transform of a grid function given in C order (flat) or torus shape."""
    _require_torus(grid)
    f = np.asarray(f).reshape(grid.shape)
    return TorusSpectrum(grid, _cell(grid) * np.fft.fftn(f))


def idft(spec):
    return np.fft.ifftn(spec.values) / spec.grid.period.prod() * np.prod(spec.grid.shape)


def measure_transform(q):
    """``Q_hat``: unweighted phase sum of a measure on the torus."""
    _require_torus(q.grid)
    return np.fft.fftn(q.weights.reshape(q.grid.shape))


def cost_spectrum(cost, grid, images=0):
    return dft(grid, sample_on_torus(cost, grid, images))


def torus_cost_matrix(cost, grid, images=0):
    """``l(x_i - x_j)`` read from the sampled torus function with indices modulo M."""
    f = sample_on_torus(cost, grid, images)
    idx = np.indices(grid.shape).reshape(grid.d, -1).T
    off = (idx[:, None, :] - idx[None, :, :]) % np.asarray(grid.shape)
    return f[tuple(off[..., a] for a in range(grid.d))]


@dataclass(frozen=True)
class PlancherelCheck:
    lhs: float
    rhs: float
    error: float
    scale: float

    @property
    def relative_error(self):
        return self.error / self.scale if self.scale > 0 else self.error


def plancherel_bilinear(cost, q, r, images=0):
    """Both sides of the bilinear identity.

    ``scale`` is ``sum |l(x - y)| Q(x) R(y)``, the natural size of either side.
    """
    if not q.grid.compatible(r.grid):
        raise ValueError("measures live on different grids")
    grid = q.grid
    _require_torus(grid)
    C = torus_cost_matrix(cost, grid, images)
    lhs = float(q.weights @ C @ r.weights)
    scale = float(q.weights @ np.abs(C) @ r.weights)
    lh = cost_spectrum(cost, grid, images).values
    rhs = float(np.sum(lh * np.conj(measure_transform(q)) * measure_transform(r)).real) / _volume(grid)
    return PlancherelCheck(lhs, rhs, abs(lhs - rhs), scale)


def plancherel_quadratic(cost, q, images=0):
    grid = q.grid
    _require_torus(grid)
    C = torus_cost_matrix(cost, grid, images)
    lhs = float(q.weights @ C @ q.weights)
    scale = float(q.weights @ np.abs(C) @ q.weights)
    lh = cost_spectrum(cost, grid, images).values
    rhs = float(np.sum(lh * np.abs(measure_transform(q)) ** 2).real) / _volume(grid)
    return PlancherelCheck(lhs, rhs, abs(lhs - rhs), scale)


@dataclass(frozen=True)
class VarianceDecomposition:
    mean_field: float
    variance_term: float
    c_infinity: float
    mean_field_spectral: float

    @property
    def identity_error(self):
        return abs(self.c_infinity - self.mean_field - self.variance_term)


def variance_decomposition(nu, cost, images=0):
    """Split ``int l d(mu2)`` for ``mu2 = sum_a nu_a Q_a (x) Q_a`` into mean field plus variance.

    ``variance_term = L^-d sum_k l_hat(k) (Var Re Q_hat(k) + Var Im Q_hat(k))``,
    the variances taken over the mixing weights ``nu``.
    """
    grid = nu.grid
    _require_torus(grid)
    C = torus_cost_matrix(cost, grid, images)
    mu = nu.mean.weights
    mean_field = float(mu @ C @ mu)
    c_inf = float(np.sum(C * mixture_pair_marginal(nu).weights))
    lh = cost_spectrum(cost, grid, images).values
    Qh = np.fft.fftn(nu.components.reshape((-1, *grid.shape)), axes=tuple(range(1, grid.d + 1)))
    w = nu.weights.reshape((-1,) + (1,) * grid.d)
    mh = (w * Qh).sum(axis=0)
    var = (w * np.abs(Qh - mh) ** 2).sum(axis=0)  # Var Re + Var Im
    vol = _volume(grid)
    variance = float(np.sum(lh * var).real) / vol
    mf_spec = float(np.sum(lh * np.abs(mh) ** 2).real) / vol
    return VarianceDecomposition(mean_field, variance, c_inf, mf_spec)


@dataclass(frozen=True)
class UniquenessCheck:
    variance_term: float
    max_component_tv: float
    tv_bound: float  # certified from the smallest spectral coefficient
    spectrum_min: float


def uniqueness_check(nu, cost, images=0):
    """Distance of each component from the mean, and the bound implied by the variance term.

    With ``l_hat >= s > 0`` everywhere,
    ``sum_a nu_a sum_x |Q_a - mu|^2 <= M^-d L^d var / s``; ``tv <= sqrt(m) * l2``.
    """
    grid = nu.grid
    dec = variance_decomposition(nu, cost, images)
    lh = cost_spectrum(cost, grid, images).values.real
    s = float(lh.min())
    mu = nu.mean
    tvs = [tv_distance(nu.component(a), mu) for a in range(nu.weights.size) if nu.weights[a] > 0]
    if s > 0:
        l2sq = max(dec.variance_term, 0.0) * _volume(grid) / (s * grid.m)
        bound = float(np.sqrt(grid.m * l2sq / max(nu.weights[nu.weights > 0].min(), 1e-300)))
    else:
        bound = float("inf")
    return UniquenessCheck(dec.variance_term, max(tvs), bound, s)


def search_negative_variance(cost, grid, rng, trials=200, max_components=4, images=0):
    """Random mixtures until one has a negative variance term; ``None`` if none is found.

    Components are drawn from sparse Dirichlet laws so that concentrated
    measures, which probe high frequencies, are common.
    """
    _require_torus(grid)
    for _ in range(trials):
        K = int(rng.integers(2, max_components + 1))
        conc = float(rng.choice([0.05, 0.2, 1.0]))
        Q = rng.dirichlet(np.full(grid.m, conc), size=K)
        nu = Mixture(grid, Q, rng.dirichlet(np.ones(K)))
        dec = variance_decomposition(nu, cost, images)
        if dec.variance_term < 0:
            return nu, dec
    return None


def spectrum_is_nonnegative(cost, grid, images=0):
    return classify_positive_definite(cost, grid, images).label != "indefinite"


def uniform_on_torus(grid):
    return DiscreteMeasure(grid, np.full(grid.m, 1.0 / grid.m))
