"""File formats: the tabulated-samples binary layout and CSV export.

Binary layout: int32 dim, int32 n (points per dimension), float64 half
width, then the row-major samples as 64-bit floats.  Complex grid
functions store n^dim complex128 values, i.e. interleaved re/im float64
pairs; the reader tells the two apart by the payload size.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grids import Grid, GridFunction
from .model import TabulatedSamples

_HEADER = struct.Struct("<iid")


def write_samples(path, dim: int, half_width: float, values: np.ndarray) -> None:
    values = np.asarray(values)
    n = values.shape[0]
    if values.shape != (n,) * dim:
        raise ConfigError(f"samples shape {values.shape} is not a {dim}-cube")
    payload = values.astype(complex) if np.iscomplexobj(values) \
        else values.astype(np.float64)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(dim, n, float(half_width)))
        fh.write(np.ascontiguousarray(payload).tobytes())


def read_samples(path) -> TabulatedSamples:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ConfigError(f"{path}: truncated header")
    dim, n, half_width = _HEADER.unpack_from(raw)
    if dim < 1 or dim > 3 or n < 2 or half_width <= 0:
        raise ConfigError(f"{path}: implausible header (d={dim}, N={n}, L={half_width})")
    body = raw[_HEADER.size:]
    count = n ** dim
    if len(body) == 8 * count:
        values = np.frombuffer(body, dtype=np.float64).reshape((n,) * dim)
    elif len(body) == 16 * count:
        values = np.frombuffer(body, dtype=np.complex128).reshape((n,) * dim)
    else:
        raise ConfigError(
            f"{path}: payload size {len(body)} matches neither real nor "
            f"complex samples for N^d = {count}")
    return TabulatedSamples(dim=dim, half_width=half_width, n=n,
                            values=values.copy())


def write_grid_function(path, f: GridFunction) -> None:
    write_samples(path, f.grid.dim, f.grid.half_width, f.values)


def read_grid_function(path, space: str = "physical") -> GridFunction:
    table = read_samples(path)
    grid = Grid(dim=table.dim, half_width=table.half_width, n=table.n)
    return GridFunction(grid, np.asarray(table.values, dtype=complex), space)


def write_grid_function_csv(path, f: GridFunction) -> None:
    """Plot-ready CSV: one coordinate column per dimension, then Re, Im."""
    pts = f.grid.points.reshape(-1, f.grid.dim)
    vals = f.values.ravel()
    cols = [pts[:, j] for j in range(f.grid.dim)] + [vals.real, vals.imag]
    header = ",".join([f"x{j}" for j in range(f.grid.dim)] + ["re", "im"])
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
               comments="")
