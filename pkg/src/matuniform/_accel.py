"""Numba dispatch switch.

Set ``MATUNIFORM_DISABLE_NUMBA=1`` in the environment to force the pure
numpy kernels (useful for debugging and for the benchmark comparison).
"""
import os

_FLAG = os.environ.get("MATUNIFORM_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as _numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged.

    The compiled and uncompiled functions are both reachable: the original is
    kept on the result as ``.py_func`` by numba itself.
    """
    if not HAVE_NUMBA:
        return func
    return _numba.njit(cache=True)(func)
