"""Backend selection for the hot trilinear kernels.

The compiled module is used when it was built; setting ``AOPTENC_PURE_PYTHON=1``
forces the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("AOPTENC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

trilinear_apply = _impl.trilinear_apply
trilinear_project = _impl.trilinear_project

__all__ = ["BACKEND", "trilinear_apply", "trilinear_project"]
