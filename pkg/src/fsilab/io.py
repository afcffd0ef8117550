"""FLD2 binary field dumps.

Layout: magic ``b"FLD2"``, little-endian u32 N, u32 component count, f64 L,
then row-major little-endian f64 samples, one N x N block per component.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import Grid2D, ScalarField, VectorField

MAGIC = b"FLD2"
_HEADER = struct.Struct("<4sIId")


def write_field(path, f) -> None:
    vals = f.values if f.values.ndim == 3 else f.values[None]
    header = _HEADER.pack(MAGIC, f.grid.N, vals.shape[0], f.grid.L)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(vals, dtype="<f8").tobytes())


def read_field(path) -> ScalarField | VectorField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated FLD2 header")
    magic, n, ncomp, L = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + 8 * n * n * ncomp
    if len(data) != expected:
        raise ValueError(f"FLD2 payload has {len(data)} bytes, expected {expected}")
    vals = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(ncomp, n, n).astype(float)
    grid = Grid2D(L, n)
    if ncomp == 1:
        return ScalarField(grid, vals[0])
    if ncomp == 2:
        return VectorField(grid, vals)
    raise ValueError(f"unsupported component count {ncomp}")
