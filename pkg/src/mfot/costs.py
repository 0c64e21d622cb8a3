"""Translation-invariant symmetric pair costs ``c(x, y) = l(x - y)``.

Extended-real convention: ``+inf * 0 = 0``, so mass-free points never
contribute an infinite term.
"""
import csv
from dataclasses import dataclass, field
from math import exp, log
from typing import Callable

import numpy as np

from . import kernels
from .measures import DiscreteMeasure, PairMeasure, as_pair, marginal
from .multiset import multiset_counts

TAU_SPEC = 1e-10


@dataclass(frozen=True, eq=False)
class CostFunction:
    name: str
    profile: Callable
    params: dict = field(default_factory=dict)
    bounded: bool = True
    singular_at_zero: bool = False
    claims_positive_definite: bool = False
    sup: float = None

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.ndim == 0:
            z = z[None]
        with np.errstate(divide="ignore"):
            return self.profile(z)

    def matrix(self, grid):
        """``l(x_i - x_j)`` over the grid (minimum-image differences on a periodic grid)."""
        return self(grid.differences())

    def spec(self):
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))


def _radius(z):
    return np.sqrt((z * z).sum(axis=-1))


def coulomb():
    return CostFunction(
        "coulomb", lambda z: 1.0 / _radius(z), bounded=False, singular_at_zero=True
    )


def coulomb_regularized(eps):
    if eps <= 0:
        raise ValueError("eps must be positive")
    return CostFunction(
        "coulomb_regularized",
        lambda z: 1.0 / np.maximum(_radius(z), eps),
        {"eps": eps},
        sup=1.0 / eps,
    )


def coulomb_cell(h, kappa=1.0):
    """Coulomb between cell midpoints with self-interaction ``kappa / h`` on the diagonal.

    Not bounded in the continuum; on a grid of spacing ``h`` its largest value is
    ``max(kappa, 1) / h``.
    """
    if h <= 0 or kappa <= 0:
        raise ValueError("h and kappa must be positive")

    def prof(z):
        r = _radius(z)
        return np.where(r == 0, kappa / h, 1.0 / np.where(r == 0, 1.0, r))

    return CostFunction("coulomb_cell", prof, {"h": h, "kappa": kappa}, bounded=False)


def gaussian(s=1.0):
    if s <= 0:
        raise ValueError("s must be positive")
    return CostFunction(
        "gaussian",
        lambda z: np.exp(-(z * z).sum(axis=-1) / (2 * s * s)),
        {"s": s},
        claims_positive_definite=True,
        sup=1.0,
    )


def truncated_quadratic(sigma=2.0):
    """``exp(-|z|^2 / 2 sigma^2) - exp(-sigma^2 |z|^2 / 2)``: zero at the origin, positive elsewhere."""
    if sigma <= 1:
        raise ValueError("truncated quadratic needs sigma > 1")
    a, b = 1.0 / (2 * sigma**2), sigma**2 / 2
    # maximiser of exp(-a r^2) - exp(-b r^2) in r^2
    r2 = log(b / a) / (b - a)
    return CostFunction(
        "truncated_quadratic",
        lambda z: np.exp(-a * (z * z).sum(axis=-1)) - np.exp(-b * (z * z).sum(axis=-1)),
        {"sigma": sigma},
        sup=exp(-a * r2) - exp(-b * r2),
    )


def quadratic():
    return CostFunction("quadratic", lambda z: (z * z).sum(axis=-1), bounded=False)


def constant(value=1.0):
    return CostFunction(
        "constant",
        lambda z: np.full(z.shape[:-1], float(value)),
        {"value": value},
        claims_positive_definite=value >= 0,
        sup=abs(value),
    )


def _key(z, ndigits=9):
    return tuple(round(float(v), ndigits) + 0.0 for v in np.atleast_1d(z))


def tabulated(table):
    """Cost given on finitely many difference vectors.

    ``table`` maps difference vectors to values; missing mirror entries are
    filled by evenness, conflicting mirrors are an error.
    """
    vals = {}
    for z, v in table.items():
        v = float(v)
        if v < 0:
            raise ValueError("cost values must be nonnegative")
        for key in (_key(z), _key(-np.asarray(z, dtype=float))):
            if key in vals and vals[key] != v:
                raise ValueError(f"table is not even at {key}")
            vals[key] = v
    dims = {len(k) for k in vals}
    if len(dims) != 1:
        raise ValueError("mixed dimensions in cost table")

    def prof(z):
        flat = z.reshape(-1, z.shape[-1])
        try:
            out = np.array([vals[_key(row)] for row in flat])
        except KeyError as e:
            raise ValueError(f"difference {e.args[0]} not in cost table") from None
        return out.reshape(z.shape[:-1])

    finite = [v for v in vals.values() if np.isfinite(v)]
    return CostFunction(
        "tabulated",
        prof,
        {"entries": len(vals)},
        bounded=len(finite) == len(vals),
        singular_at_zero=not np.isfinite(vals.get(_key(np.zeros(dims.pop())), 0.0)),
        sup=max(finite) if finite else None,
    )


def load_tabulated_csv(path):
    """Rows ``dz_1, ..., dz_d, value``; a header row is allowed."""
    table = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                nums = [float(x) for x in row]
            except ValueError:
                if table:
                    raise
                continue
            table[tuple(nums[:-1])] = nums[-1]
    return tabulated(table)


REGISTRY = {
    "coulomb": coulomb,
    "coulomb_regularized": coulomb_regularized,
    "coulomb_cell": coulomb_cell,
    "gaussian": gaussian,
    "truncated_quadratic": truncated_quadratic,
    "quadratic": quadratic,
    "constant": constant,
}


def make_cost(name, **params):
    if name == "tabulated":
        return load_tabulated_csv(params["path"])
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown cost {name!r}; known: {sorted(REGISTRY) + ['tabulated']}") from None
    return factory(**params)


def parse_cost(text):
    """``"gaussian:s=0.7071"`` -> CostFunction."""
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        k, eq, v = item.partition("=")
        if not eq:
            raise ValueError(f"bad cost parameter {item!r}")
        try:
            params[k.strip()] = float(v)
        except ValueError:
            params[k.strip()] = v.strip()
    return make_cost(name.strip(), **params)


# -- integrals ----------------------------------------------------------------


def _masked_sum(C, w):
    hit = w > 0
    if np.any(np.isinf(C[hit])):
        return float("inf")
    return float((np.where(hit, C, 0.0) * w).sum())


def pair_cost_integral(c, mu2):
    """``sum_ij c(x_i, x_j) mu2[i, j]``; ``+inf`` if mass sits where the cost is infinite."""
    mu2 = as_pair(mu2)
    return _masked_sum(c.matrix(mu2.grid), mu2.weights)


def multiset_pair_sums(c, grid, n):
    """Sum over the C(n, 2) unordered pairs inside each size-n multiset."""
    return kernels.pair_sums(multiset_counts(grid.m, n), np.ascontiguousarray(c.matrix(grid)))


def nbody_cost(c, gamma):
    """``sum_{a<b} c(x_a, x_b)`` integrated against an N-body measure."""
    if isinstance(gamma, PairMeasure):
        return pair_cost_integral(c, gamma)
    if isinstance(gamma, DiscreteMeasure):
        raise ValueError("one-body measure has no pair cost")
    if gamma.mode == "multiset":
        return _masked_sum(multiset_pair_sums(c, gamma.grid, gamma.n), gamma.weights)
    total = 0.0
    for a in range(gamma.n):
        for b in range(a + 1, gamma.n):
            total += pair_cost_integral(c, marginal(gamma, 2, slots=(a, b)))
    return total


# -- positive definiteness on a torus --------------------------------------------


def sample_on_torus(c, grid, images=0):
    """Cost sampled at the grid offsets, reshaped to the torus shape.

    Offsets are taken as minimum images. ``images > 0`` adds the periodic copies
    ``l(x + pL)`` for ``|p_i| <= images``.
    """
    if not grid.is_uniform_torus:
        raise ValueError("need a uniform periodic grid (SupportGrid.torus)")
    if c.singular_at_zero:
        raise ValueError(f"{c.name} is singular at 0 and cannot be sampled on a torus")
    L = grid.period
    x = grid.points - L * np.round(grid.points / L)
    vals = c(x)
    if images:
        vals = np.zeros(grid.m)
        rng = np.arange(-images, images + 1)
        for p in np.array(np.meshgrid(*([rng] * grid.d), indexing="ij")).reshape(grid.d, -1).T:
            vals = vals + c(x + p * L)
    return vals.reshape(grid.shape)


@dataclass(frozen=True)
class DefinitenessReport:
    label: str
    min_coefficient: float
    max_coefficient: float
    spectrum: np.ndarray = field(repr=False)
    grid_relative: bool = True


def classify_positive_definite(c, grid, images=0):
    """Sign of the DFT of ``l`` on the torus: ``strictly_positive``, ``positive`` or ``indefinite``.

    The threshold ``TAU_SPEC`` is applied relative to the largest spectral
    magnitude. The verdict is about this grid only.
    """
    f = sample_on_torus(c, grid, images)
    h = grid.period / np.asarray(grid.shape)
    spec = np.fft.fftn(f) * float(np.prod(h))
    scale = float(np.abs(spec).max()) or 1.0
    if np.abs(spec.imag).max() > 1e-9 * scale:
        raise ValueError(f"{c.name} is not even on this torus")
    spec = spec.real
    lo = float(spec.min())
    if lo > TAU_SPEC * scale:
        label = "strictly_positive"
    elif lo >= -TAU_SPEC * scale:
        label = "positive"
    else:
        label = "indefinite"
    return DefinitenessReport(label, lo, float(spec.max()), spec)
