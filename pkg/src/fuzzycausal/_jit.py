"""numba switch.

Set ``FUZZYCAUSAL_DISABLE_JIT=1`` before import to run the pure-numpy kernels.
"""

import os

DISABLED = os.environ.get("FUZZYCAUSAL_DISABLE_JIT", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_JIT = HAVE_NUMBA and not DISABLED


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


__all__ = ["njit", "USE_JIT", "HAVE_NUMBA", "DISABLED"]
