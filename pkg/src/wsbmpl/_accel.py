"""Backend selection for the numeric kernels.

Set ``WSBMPL_DISABLE_NUMBA=1`` before importing the package to force the
pure-numpy code paths.  When numba is missing the numpy paths are used
automatically.
"""
import os

_FALSE = {"", "0", "false", "no", "off"}

try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("WSBMPL_DISABLE_NUMBA", "0").strip().lower() in _FALSE


def njit(fn):
    """Compile ``fn`` with numba when available, otherwise return it unchanged."""
    if not HAS_NUMBA:
        return fn
    return _njit(cache=True, nogil=True)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
