"""Kernel backend selection: compiled extension when built, numpy otherwise."""

from __future__ import annotations

from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built; the numpy path is always available
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _kernels_py


def active() -> ModuleType:
    return _active


def backend_name() -> str:
    return _active.BACKEND


def use_backend(name: str) -> str:
    """Switch kernels ("compiled" or "python"); returns the previous name.

    Exists for tests and benchmarks; normal use keeps the import-time choice.
    """
    global _active
    previous = _active.BACKEND
    if name == "python":
        _active = _kernels_py
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available in this install")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous
