"""Kernel backend selection.

The compiled extension is used when it imports; set ``DOFCAST_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("DOFCAST_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

logdet_hpd = _impl.logdet_hpd
uniform_quantize = _impl.uniform_quantize

__all__ = ["BACKEND", "logdet_hpd", "uniform_quantize"]
