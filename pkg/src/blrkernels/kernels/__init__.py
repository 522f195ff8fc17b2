"""Tile kernels, dispatched to the numba or numpy implementation."""
from importlib import import_module

from .._backend import backend_name

_MODULES = {
    "numba": "blrkernels.kernels.numba_kernels",
    "numpy": "blrkernels.kernels.numpy_kernels",
}


def get_kernels(name: str | None = None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    return import_module(_MODULES[name or backend_name()])
