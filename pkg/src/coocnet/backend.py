"""Selects the kernel backend: compiled Cython core or numpy fallback.

The compiled module is built at install time when a C compiler is present;
otherwise (or when COOCNET_BACKEND=python is set) the numpy implementations
are used. Both backends expose the same functions with identical results.
"""

import os
from contextlib import contextmanager

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

_MODULES = {"python": _kernels_py}
if _kernels_c is not None:
    _MODULES["compiled"] = _kernels_c


def _initial_backend():
    requested = os.environ.get("COOCNET_BACKEND", "").strip().lower()
    if requested:
        if requested not in _MODULES:
            raise RuntimeError(
                f"COOCNET_BACKEND={requested!r} is not available; "
                f"choose one of {sorted(_MODULES)}"
            )
        return requested
    return "compiled" if "compiled" in _MODULES else "python"


_active = _initial_backend()


def available_backends():
    """Names of the usable backends ('python' always, 'compiled' if built)."""
    return tuple(sorted(_MODULES))


def active_backend():
    return _active


def set_backend(name):
    global _active
    if name not in _MODULES:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(_MODULES)}")
    _active = name


@contextmanager
def use_backend(name):
    """Temporarily switch the kernel backend (used by tests and benchmarks)."""
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def kernels():
    """The active kernel module."""
    return _MODULES[_active]
