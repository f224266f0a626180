"""JIT switch shared by the kernel module.

Set ``E3BANDIT_DISABLE_JIT=1`` to force the interpreted numpy path even when
numba is importable.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
JIT_DISABLED = os.environ.get("E3BANDIT_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = HAVE_NUMBA and not JIT_DISABLED


def njit(fn):
    """Compile ``fn`` with numba when available, else hand it back untouched."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
