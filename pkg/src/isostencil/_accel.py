"""JIT switch for the hot kernels.

Kernels are written twice: an explicit-loop version compiled with numba and a
vectorised numpy version. Set ``ISOSTENCIL_DISABLE_JIT=1`` to force the numpy
path (also used automatically when numba is missing).
"""

from __future__ import annotations

import os

_FLAG = "ISOSTENCIL_DISABLE_JIT"


def _jit_requested() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in {"1", "true", "yes", "on"}


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and _jit_requested()


def njit(func):
    """Compile ``func`` with numba when available, otherwise return it untouched."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)


def select(jitted, fallback):
    """Pick the compiled kernel or the numpy fallback according to ``USE_JIT``."""
    return jitted if USE_JIT else fallback
