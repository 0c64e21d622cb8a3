from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class LpError(Exception):
    pass


class NumericalBreakdown(LpError):
    """Residual or gap targets could not be met."""


class SizeLimitExceeded(LpError):
    pass


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-9
    gap: float = 1e-8
    farkas: float = 1e-7


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min c.x  s.t.  A x = b,  x >= 0`` with ``A`` in column-compressed storage.

    Objective entries may be ``+inf``; those variables are fixed to zero by presolve.
    """

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    name: str = "LP"

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64).ravel()
        b = np.asarray(self.b, dtype=np.float64).ravel()
        A = sp.csc_matrix(self.A, dtype=np.float64)
        A.sum_duplicates()
        A.eliminate_zeros()
        r, n = A.shape
        if r < 1 or n < 1:
            raise ValueError("LP needs at least one row and one column")
        if c.shape != (n,) or b.shape != (r,):
            raise ValueError(f"shape mismatch: A {A.shape}, c {c.shape}, b {b.shape}")
        if not np.all(np.isfinite(A.data)) or not np.all(np.isfinite(b)):
            raise ValueError("A and b must be finite")
        if np.any(np.isnan(c)) or np.any(c == -np.inf):
            raise ValueError("objective must be finite or +inf")
        for name, v in (("c", c), ("b", b)):
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        object.__setattr__(self, "A", A)

    @classmethod
    def from_dense(cls, c, A, b, name="LP"):
        return cls(c, sp.csc_matrix(np.atleast_2d(np.asarray(A, dtype=np.float64))), b, name)

    @property
    def shape(self):
        return self.A.shape


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: object = None
    objective: object = None
    y: object = None
    farkas: object = None
    iterations: int = 0
    residual: float = 0.0
    gap: float = 0.0
    farkas_margin: float = None
    marginal: bool = False
    pivot_rule: str = "steepest_edge"
    exact: bool = False
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == "optimal"


def verify_farkas(A, b, y, tol=DEFAULT_TOL):
    """``y.A <= tol.feas`` componentwise and ``y.b > tol.farkas`` for ``y`` scaled to unit max-norm."""
    y = np.asarray(y, dtype=np.float64)
    s = np.abs(y).max()
    if s == 0:
        return False
    y = y / s
    return bool(np.all(sp.csc_matrix(A).T @ y <= tol.feas) and float(b @ y) > tol.farkas)
