"""Backend selection for the hot kernels.

``LANEPATH_ACCEL=numpy`` forces the pure-numpy path; any other value (or
unset) uses numba when it is importable.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
BACKEND = "numpy"
if HAVE_NUMBA and os.environ.get("LANEPATH_ACCEL", "numba").strip().lower() not in (
    "numpy",
    "0",
    "off",
    "none",
):
    BACKEND = "numba"


def njit(fn):
    """Compile ``fn`` in nopython mode, or return it untouched without numba."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
