"""Select the RK4 kernel backend at import.

The compiled extension is used when it was built; set
``STATRANSPORT_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("STATRANSPORT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    else:
        BACKEND = "cython"
else:
    _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py

rk4_path = _impl.rk4_path
rk4_ensemble = _impl.rk4_ensemble

MODEL_CODES = {"harmonic": 0, "quartic": 1, "full-gaussian": 2}

__all__ = ["BACKEND", "MODEL_CODES", "rk4_path", "rk4_ensemble"]
