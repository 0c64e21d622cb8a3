"""Self-contained LP kernel: ``min c.x, Ax = b, x >= 0``."""
from .exact import solve_exact
from .model import (
    DEFAULT_TOL,
    LinearProgram,
    LpError,
    LpResult,
    NumericalBreakdown,
    SizeLimitExceeded,
    Tolerances,
    verify_farkas,
)
from .mps import read_mps, write_mps
from .simplex import solve

__all__ = [
    "DEFAULT_TOL",
    "LinearProgram",
    "LpError",
    "LpResult",
    "NumericalBreakdown",
    "SizeLimitExceeded",
    "Tolerances",
    "read_mps",
    "solve",
    "solve_exact",
    "verify_farkas",
    "write_mps",
]
