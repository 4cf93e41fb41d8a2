"""Hot-loop kernels, compiled when available with a numpy fallback.

Set ``SECSLOT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("SECSLOT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

point_queue = _impl.point_queue
realized_pmf = _impl.realized_pmf

__all__ = ["BACKEND", "point_queue", "realized_pmf"]
