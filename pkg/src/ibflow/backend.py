"""Kernel backend selection: numba JIT by default, pure numpy on request.

Set ``IBFLOW_NO_NUMBA=1`` in the environment (before import) to run every
hot kernel as plain Python/numpy. The fallback executes the exact same
source, so results agree between backends; it is simply much slower on
long trajectories.
"""

import os

_ENV_FLAG = "IBFLOW_NO_NUMBA"

_numba_requested = os.environ.get(_ENV_FLAG, "").strip().lower() not in (
    "1",
    "true",
    "yes",
)

if _numba_requested:
    try:
        from numba import njit as _njit

        _numba_active = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _numba_active = False
else:
    _numba_active = False


def numba_enabled() -> bool:
    """True when kernels are JIT-compiled in this process."""
    return _numba_active


def backend_name() -> str:
    return "numba" if _numba_active else "numpy"


def jit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged."""
    if _numba_active:
        return _njit(cache=True)(func)
    return func
