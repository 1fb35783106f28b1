"""Numba availability switch.

Set ``DCGRID_NUMBA=0`` in the environment to force the pure-numpy kernels.
"""
import os

_FLAG = os.environ.get("DCGRID_NUMBA", "1").strip().lower()
_REQUESTED = _FLAG not in ("0", "false", "no", "off")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _REQUESTED


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise.

    Kernels are always compiled when numba is importable, so the numba
    backend can be benchmarked even if the default backend is numpy.
    """
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrapper(f):
        return f

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrapper
