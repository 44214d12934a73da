"""Backend selection for the hot kernels.

Numba is used when it is importable and ``POROHYST_DISABLE_NUMBA`` is unset
(or set to ``0``/``false``).  Every jitted kernel has a pure-numpy twin with
the same signature, so the flag only changes speed and summation order.
"""

import os

_FLAG = os.environ.get("POROHYST_DISABLE_NUMBA", "0").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

# prefer OpenMP and the built-in work queue over an outdated system TBB
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is present in the dev env
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


if HAVE_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def set_threads(n):
    """Set the numba thread count; a no-op on the numpy path."""
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
