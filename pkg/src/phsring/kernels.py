"""Stepping-kernel selection.

The compiled kernel is used when the extension was built; otherwise the numpy
fallback. Setting ``PHSRING_KERNEL=python`` forces the fallback.
"""
from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

_KERNELS = {"python": _kernel_py.advance}
if _ckernel is not None:
    _KERNELS["cython"] = _ckernel.advance

#: Names of kernels usable in this installation.
AVAILABLE = tuple(_KERNELS)

_requested = os.environ.get("PHSRING_KERNEL", "").strip().lower()
if _requested and _requested not in _KERNELS:
    raise ImportError(
        f"PHSRING_KERNEL={_requested!r} is not available; choose from {AVAILABLE}"
    )
#: Name of the kernel used by default.
BACKEND = _requested or ("cython" if "cython" in _KERNELS else "python")


def get_advance(name: str | None = None):
    """Return the ``advance`` function for kernel ``name`` (default: :data:`BACKEND`)."""
    key = BACKEND if name is None else name
    try:
        return _KERNELS[key]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; available: {AVAILABLE}") from None
