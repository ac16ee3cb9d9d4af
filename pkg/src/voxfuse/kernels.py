"""Kernel backend selection.

The compiled extension is used when importable; set ``VOXFUSE_KERNELS=python``
to force the numpy fallback.  ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels

try:
    if os.environ.get("VOXFUSE_KERNELS", "").lower() == "python":
        raise ImportError("compiled kernels disabled by VOXFUSE_KERNELS")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

padded_sat = _impl.padded_sat
mark_passing = _impl.mark_passing
gate_covered = _impl.gate_covered

__all__ = ["BACKEND", "padded_sat", "mark_passing", "gate_covered"]
