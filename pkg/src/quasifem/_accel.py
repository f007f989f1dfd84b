"""Numba on/off switch.

Set ``QUASIFEM_DISABLE_NUMBA=1`` before import to force the pure-numpy paths.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("QUASIFEM_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")
USE_NUMBA = numba is not None and not DISABLED


def njit(func):
    """Compile ``func`` with numba when available, else return it untouched."""
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def set_threads(n):
    if numba is not None and n:
        numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))
