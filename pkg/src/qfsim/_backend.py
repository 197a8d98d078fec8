"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the numpy
fallback is used. Both produce bit-identical results, so the choice only
affects speed. Set QFSIM_BACKEND=c or QFSIM_BACKEND=numpy to force one
(forcing `c` raises if the extension is missing).
"""
from __future__ import annotations

import os

from . import _kernels_np

try:
    from . import _kernel as _kernel_c
except ImportError:
    _kernel_c = None


def available_backends() -> tuple[str, ...]:
    return ("c", "numpy") if _kernel_c is not None else ("numpy",)


def get_kernels(name: str | None = None):
    """Return the kernel module for `name` (or the environment/default pick)."""
    if name is None:
        name = os.environ.get("QFSIM_BACKEND", "auto")
    if name in ("auto", ""):
        return _kernel_c if _kernel_c is not None else _kernels_np
    if name == "numpy":
        return _kernels_np
    if name == "c":
        if _kernel_c is None:
            raise RuntimeError("compiled kernel requested but qfsim._kernel is not built")
        return _kernel_c
    raise ValueError(f"unknown backend {name!r} (expected 'auto', 'c' or 'numpy')")


def backend_name(kernels=None) -> str:
    if kernels is None:
        kernels = get_kernels()
    return "c" if kernels is _kernel_c and _kernel_c is not None else "numpy"
