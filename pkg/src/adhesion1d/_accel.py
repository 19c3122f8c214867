"""Numba toggle.

Set ``ADHESION1D_DISABLE_NUMBA=1`` before import to run every hot kernel
through its pure-numpy counterpart instead of the compiled loop.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
    # skip probing an outdated TBB; every kernel's result is layer-independent
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("ADHESION1D_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is present, identity otherwise.

    Compiled objects are always created when numba is importable so the
    benchmark can compare both paths in one process; ``USE_NUMBA`` only
    decides which one the public dispatchers pick.
    """
    kwargs.setdefault("cache", True)
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


prange = numba.prange if HAVE_NUMBA else range


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
