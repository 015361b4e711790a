"""Backend switch for the compiled kernels.

The ODE kernels are written in the subset of Python that numba compiles.
By default they are compiled with ``numba.njit``; setting ``TCRES_BACKEND=numpy``
(or ``TCRES_NO_NUMBA=1``) runs the very same functions as plain Python, which
is slow but needs nothing beyond numpy.
"""

from __future__ import annotations

import os

try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False


def _numba_requested() -> bool:
    if os.environ.get("TCRES_NO_NUMBA", "").strip() not in ("", "0"):
        return False
    return os.environ.get("TCRES_BACKEND", "numba").strip().lower() != "numpy"


USE_NUMBA = HAS_NUMBA and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"


def kernel(func):
    """Compile ``func`` with numba when the numba backend is active."""
    if USE_NUMBA:
        return _njit(cache=True)(func)
    return func
