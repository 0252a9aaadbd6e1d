'''
GridFunction codecs.

CSV: one row per lattice point in C order, coordinate columns then the
value column(s). Binary: an 8-byte little-endian header length, a UTF-8
JSON header, then the samples as little-endian float64 (complex128 for
complex data). The binary form round-trips bit-exactly.
'''
import csv
import io
import json
import struct
from pathlib import Path
from typing import List

import numpy as np

from util.files import readbytes, readfile, write_atomic
from util.typing import PathLike
from .grid import BoundaryPolicy, Grid, GridError, GridFunction


BINARY_FORMAT = "smoothfactor-grid"
BINARY_VERSION = 1
_LENGTH = struct.Struct("<Q")


def to_csv(f: GridFunction) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = [f"x{axis}" for axis in range(f.grid.dim)]
    header += ["value_real", "value_imag"] if f.is_complex else ["value"]
    writer.writerow(header)
    coords = [c.ravel() for c in f.grid.coordinates()]
    values = f.values.ravel()
    for i in range(values.size):
        row = [repr(float(c[i])) for c in coords]
        if f.is_complex:
            row += [repr(float(values[i].real)), repr(float(values[i].imag))]
        else:
            row.append(repr(float(values[i])))
        writer.writerow(row)
    return out.getvalue()


def from_csv(text: str, boundary_policy: BoundaryPolicy = BoundaryPolicy.SHRINK) -> GridFunction:
    '''
    Parses a CSV written by to_csv, reconstructing the grid from the
    coordinate columns.

    @raises GridError: if the rows do not form a complete lattice in C order
    '''
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise GridError("CSV grid has no data rows")
    header, data = rows[0], np.array([[float(v) for v in row] for row in rows[1:]])
    is_complex = header[-1] == "value_imag"
    dim = len(header) - (2 if is_complex else 1)
    if dim < 1 or header[:dim] != [f"x{axis}" for axis in range(dim)]:
        raise GridError("CSV grid header must start with coordinate columns x0, x1, ...", header)

    lower: List[float] = []
    upper: List[float] = []
    spacing: List[float] = []
    for axis in range(dim):
        axis_values = np.unique(data[:, axis])
        if axis_values.size < 2:
            raise GridError(f"CSV grid axis {axis} has fewer than two points")
        lower.append(float(axis_values[0]))
        upper.append(float(axis_values[-1]))
        spacing.append(float((axis_values[-1] - axis_values[0]) / (axis_values.size - 1)))
    grid = Grid(tuple(lower), tuple(upper), tuple(spacing))
    if data.shape[0] != grid.size:
        raise GridError(f"CSV grid has {data.shape[0]} rows, expected {grid.size}")
    for axis, c in enumerate(grid.coordinates()):
        if not np.allclose(data[:, axis], c.ravel(), rtol=0, atol=1e-9 * grid.spacing[axis]):
            raise GridError(f"CSV rows are not in lattice order on axis {axis}")

    if is_complex:
        values = data[:, dim] + 1j * data[:, dim + 1]
    else:
        values = data[:, dim]
    return GridFunction(grid, values.reshape(grid.shape), boundary_policy)


def to_binary(f: GridFunction) -> bytes:
    header = {
        "format": BINARY_FORMAT,
        "version": BINARY_VERSION,
        "lower": list(f.grid.lower),
        "upper": list(f.grid.upper),
        "spacing": list(f.grid.spacing),
        "shape": list(f.grid.shape),
        "dtype": "complex128" if f.is_complex else "float64",
        "boundary_policy": f.boundary_policy.value,
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    dtype = "<c16" if f.is_complex else "<f8"
    return _LENGTH.pack(len(encoded)) + encoded + f.values.astype(dtype).tobytes(order="C")


def from_binary(data: bytes) -> GridFunction:
    if len(data) < _LENGTH.size:
        raise GridError("Binary grid is truncated")
    (length,) = _LENGTH.unpack_from(data)
    try:
        header = json.loads(data[_LENGTH.size:_LENGTH.size + length].decode("utf-8"))
    except ValueError as e:
        raise GridError("Binary grid header is not valid JSON", e)
    if header.get("format") != BINARY_FORMAT or header.get("version") != BINARY_VERSION:
        raise GridError("Unsupported binary grid format", header.get("format"))

    grid = Grid(tuple(header["lower"]), tuple(header["upper"]), tuple(header["spacing"]))
    if list(grid.shape) != header["shape"]:
        raise GridError("Binary grid shape does not match its box", header["shape"])
    dtype = "<c16" if header["dtype"] == "complex128" else "<f8"
    values = np.frombuffer(data, dtype=dtype, offset=_LENGTH.size + length)
    if values.size != grid.size:
        raise GridError(f"Binary grid holds {values.size} samples, expected {grid.size}")
    return GridFunction(grid, values.reshape(grid.shape), BoundaryPolicy(header["boundary_policy"]))


def write_grid(path: PathLike, f: GridFunction) -> None:
    if Path(path).suffix == ".csv":
        write_atomic(path, to_csv(f))
    else:
        write_atomic(path, to_binary(f))


def read_grid(path: PathLike) -> GridFunction:
    if Path(path).suffix == ".csv":
        return from_csv(readfile(path))
    return from_binary(readbytes(path))
