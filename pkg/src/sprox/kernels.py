"""Kernel backend selection.

The compiled extension is used when it imports; set ``SPROX_KERNELS=python``
to force the numpy fallback.
"""
import os

from . import _pykernels

_forced = os.environ.get("SPROX_KERNELS", "").lower()
_ckernels = None
if _forced != "python":
    try:
        from . import _ckernels
    except ImportError:
        if _forced == "cython":
            raise

BACKEND = "cython" if _ckernels is not None else "python"
_impl = _ckernels if _ckernels is not None else _pykernels

penalty_eval = _impl.penalty_eval
soft_threshold = _impl.soft_threshold
polyak_subgradient = _impl.polyak_subgradient


def available_backends():
    """Names mapped to kernel modules that imported successfully."""
    out = {"python": _pykernels}
    if _ckernels is not None:
        out["cython"] = _ckernels
    return out


def use_backend(name):
    """Switch the active backend for this process (tests and benchmarks)."""
    global penalty_eval, soft_threshold, polyak_subgradient, BACKEND
    mod = available_backends()[name]
    penalty_eval = mod.penalty_eval
    soft_threshold = mod.soft_threshold
    polyak_subgradient = mod.polyak_subgradient
    BACKEND = name
