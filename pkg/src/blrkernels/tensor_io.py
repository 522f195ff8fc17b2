"""Minimal binary tensor files.

Layout (little-endian): ``b"BLRT"``, u32 version, u32 dtype code (0 = f32),
u32 rank, ``rank`` u64 dims, then the row-major payload.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import TensorFormatError, TruncatedTensorError

MAGIC = b"BLRT"
VERSION = 1
DTYPES = {0: np.dtype("<f4")}
_HEAD = struct.Struct("<4sIII")


def to_bytes(tensor) -> bytes:
    arr = np.asarray(tensor, dtype="<f4")   # ascontiguousarray would promote 0-d to 1-d
    head = _HEAD.pack(MAGIC, VERSION, 0, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return head + dims + arr.tobytes(order="C")


def from_bytes(data: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(data) < _HEAD.size:
        raise TruncatedTensorError(f"{source}: {len(data)} bytes is shorter than the header")
    magic, version, code, rank = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise TensorFormatError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise TensorFormatError(f"{source}: unsupported version {version}")
    if code not in DTYPES:
        raise TensorFormatError(f"{source}: unknown dtype code {code}")
    off = _HEAD.size + 8 * rank
    if len(data) < off:
        raise TruncatedTensorError(f"{source}: header declares {rank} dims but the file ends early")
    shape = struct.unpack_from(f"<{rank}Q", data, _HEAD.size)
    dtype = DTYPES[code]
    need = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    have = len(data) - off
    if have < need:
        raise TruncatedTensorError(f"{source}: payload has {have} bytes, expected {need}")
    if have > need:
        raise TensorFormatError(f"{source}: {have - need} trailing bytes after payload")
    arr = np.frombuffer(data, dtype=dtype, count=need // dtype.itemsize, offset=off)
    return arr.reshape(shape).astype(np.float32)


def write_tensor(path, tensor) -> None:
    Path(path).write_bytes(to_bytes(tensor))


def read_tensor(path) -> np.ndarray:
    p = Path(path)
    return from_bytes(p.read_bytes(), str(p))
