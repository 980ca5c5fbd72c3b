"""Binary field snapshots.

Layout: a fixed header (magic ``BEPW0001``, dims as u32, three u32 point
counts, six f64 axis extents, all little-endian) followed by the
row-major f64 payload with axis 1 varying fastest.  Unused axes carry a
point count of 1 and zero extents.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import Grid, ParameterError, ScalarField

MAGIC = b"BEPW0001"
_HEADER = struct.Struct("<8sI3I6d")


def save_field(path, f: ScalarField):
    grid = f.grid
    pts = list(grid.points) + [1] * (3 - grid.dims)
    ext = [grid.x1_extent[0], grid.x1_extent[1]]
    for ax in range(1, 3):
        ext += [0.0, grid.lengths[ax - 1]] if ax < grid.dims else [0.0, 0.0]
    header = _HEADER.pack(MAGIC, grid.dims, *pts, *ext)
    full = f.values.reshape(pts)
    payload = np.ascontiguousarray(full.transpose(2, 1, 0)).tobytes()
    Path(path).write_bytes(header + payload)


def load_field(path) -> ScalarField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ParameterError(f"{path}: truncated snapshot header")
    magic, dims, n1, n2, n3, *ext = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ParameterError(f"{path}: bad magic {magic!r}")
    pts = (n1, n2, n3)
    grid = Grid(
        dims=dims,
        points=pts[:dims],
        x1_extent=(ext[0], ext[1]),
        lengths=tuple(ext[2 * ax + 1] for ax in range(1, dims)),
    )
    count = n1 * n2 * n3
    vals = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER.size)
    vals = vals.reshape(n3, n2, n1).transpose(2, 1, 0)
    return ScalarField(grid, vals.reshape(grid.shape).copy())
