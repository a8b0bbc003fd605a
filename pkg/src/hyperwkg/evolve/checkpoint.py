"""Checkpoint format for :class:`GridState`.

Layout (little endian):
    4 bytes   magic b"HWKG"
    uint32    format version (1)
    float64   h, L, t
    uint64    n1, n2
    4 arrays  u, u_t, v, v_t as row-major float64, n1*n2 values each
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import GridState

MAGIC = b"HWKG"
VERSION = 1
_HEADER = struct.Struct("<4sI3d2Q")


def save_checkpoint(path, state: GridState, h: float, L: float) -> None:
    n1, n2 = state.u.shape
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, h, L, state.t, n1, n2))
        for arr in state.arrays():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (state, h, L)."""
    data = Path(path).read_bytes()
    magic, version, h, L, t, n1, n2 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError("not a checkpoint file")
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    size = n1 * n2
    off = _HEADER.size
    if len(data) != off + 4 * 8 * size:
        raise ValueError("truncated checkpoint")
    arrays = [np.frombuffer(data, dtype="<f8", count=size, offset=off + 8 * size * k).reshape(n1, n2).copy()
              for k in range(4)]
    return GridState(*arrays, t), h, L
