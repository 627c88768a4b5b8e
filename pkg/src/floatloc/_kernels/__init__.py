"""Kernel backend selection.

The compiled extension is preferred; set ``FLOATLOC_PURE_PYTHON=1`` to force the
pure-Python fallback.
"""

import os

from . import _purepy

if os.environ.get("FLOATLOC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _purepy
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _purepy
        BACKEND = "python"

trilateration_cost = _impl.trilateration_cost
tdoa_cost = _impl.tdoa_cost
nelder_mead_trilateration = _impl.nelder_mead_trilateration
nelder_mead_tdoa = _impl.nelder_mead_tdoa
range_rate_mask = _impl.range_rate_mask


def backends():
    """Available kernel modules keyed by name, for tests and benchmarks."""
    out = {"python": _purepy}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
