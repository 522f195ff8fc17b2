"""Kernel backend selection.

``BLRK_BACKEND=numba`` (default when numba imports) runs the jitted tile
kernels; ``BLRK_BACKEND=numpy`` runs the pure-numpy fallback.  Both produce
identical counter values; only speed and summation order differ.
"""
from __future__ import annotations

import contextlib
import importlib.util
import os

ENV_VAR = "BLRK_BACKEND"
BACKENDS = ("numba", "numpy")

_override: str | None = None


def numba_available() -> bool:
    return importlib.util.find_spec("numba") is not None


def backend_name() -> str:
    if _override is not None:
        return _override
    requested = os.environ.get(ENV_VAR, "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(f"{ENV_VAR} must be one of {BACKENDS}, got {requested!r}")
    return "numba" if numba_available() else "numpy"


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily force a backend (tests and the backend benchmark use this)."""
    global _override
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not numba_available():
        raise RuntimeError("numba is not installed")
    prev, _override = _override, name
    try:
        yield
    finally:
        _override = prev
