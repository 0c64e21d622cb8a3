"""Numba switch.

Kernels come in two flavours: a numba ``@njit`` loop and a vectorised numpy
path. ``MFOT_DISABLE_NUMBA=1`` in the environment forces the numpy path; it is
also used automatically when numba cannot be imported.
"""
import os

ENV_FLAG = "MFOT_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def _disabled_by_env():
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()


def opts():
    return dict(cache=True, nogil=True, error_model="numpy")


def njit(fn):
    """Compile ``fn`` lazily with numba if it is installed; otherwise return it unchanged."""
    if HAVE_NUMBA:
        return numba.njit(**opts())(fn)
    return fn


def pick(nb_impl, np_impl):
    return nb_impl if USE_NUMBA else np_impl


def backend():
    return "numba" if USE_NUMBA else "numpy"
