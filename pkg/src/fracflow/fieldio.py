"""Scalar-field files.

CSV
    A header line ``# fracflow-field v1, ndim=<n>, dims=<N1>x<N2>, length=<L1>x<L2>``
    followed by one ``x[,y[,z]],value`` row per node in row-major order,
    all numbers with 17 significant digits.

Binary
    ``FFLD`` magic, ``u32`` version (1), ``u8`` ndim, per-axis ``u64`` counts,
    per-axis ``f64`` lengths, then the ``f64`` row-major payload; all
    little-endian.
"""

from __future__ import annotations

import io
import re
import struct
from pathlib import Path

import numpy as np

from fracflow.errors import FieldIOError
from fracflow.fields import Boundary, GridSpec, ScalarField

MAGIC = b"FFLD"
VERSION = 1
_HEADER = re.compile(r"#\s*fracflow-field v1,\s*ndim=(\d),\s*dims=([\dx]+),\s*length=([^\s,]+)")


def _csv_header(grid: GridSpec) -> str:
    dims = "x".join(str(n) for n in grid.n)
    lengths = "x".join(format(L, ".17g") for L in grid.length)
    return f"fracflow-field v1, ndim={grid.ndim}, dims={dims}, length={lengths}"


def write_field(field: ScalarField, path, fmt: str = "csv") -> Path:
    path = Path(path)
    grid = field.grid
    try:
        if fmt == "csv":
            cols = [c.ravel() for c in grid.mesh()] + [field.values.ravel()]
            np.savetxt(path, np.column_stack(cols), fmt="%.17g", delimiter=",", header=_csv_header(grid))
        elif fmt in ("bin", "binary"):
            head = struct.pack("<4sIB", MAGIC, VERSION, grid.ndim)
            head += struct.pack(f"<{grid.ndim}Q", *grid.n)
            head += struct.pack(f"<{grid.ndim}d", *grid.length)
            path.write_bytes(head + np.ascontiguousarray(field.values, dtype="<f8").tobytes())
        else:
            raise ValueError(f"unknown field format {fmt!r}")
    except OSError as exc:
        raise FieldIOError(f"cannot write {path}: {exc}") from exc
    return path


def _read_binary(data: bytes, boundary: Boundary) -> ScalarField:
    magic, version, ndim = struct.unpack_from("<4sIB", data, 0)
    if version != VERSION:
        raise FieldIOError(f"unsupported field version {version}")
    offset = struct.calcsize("<4sIB")
    counts = struct.unpack_from(f"<{ndim}Q", data, offset)
    offset += 8 * ndim
    lengths = struct.unpack_from(f"<{ndim}d", data, offset)
    offset += 8 * ndim
    values = np.frombuffer(data, dtype="<f8", offset=offset)
    if values.size != int(np.prod(counts)):
        raise FieldIOError("payload size does not match the header")
    grid = GridSpec(ndim, counts, lengths, boundary)
    return ScalarField(grid, values.reshape(counts).astype(float))


def _read_csv(text: str, boundary: Boundary) -> ScalarField:
    first = text.split("\n", 1)[0]
    match = _HEADER.match(first)
    if not match:
        raise FieldIOError("missing fracflow-field header")
    ndim = int(match.group(1))
    counts = tuple(int(v) for v in match.group(2).split("x"))
    lengths = tuple(float(v) for v in match.group(3).split("x"))
    table = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", ndmin=2)
    if table.shape != (int(np.prod(counts)), ndim + 1):
        raise FieldIOError(f"expected {np.prod(counts)} rows of {ndim + 1} columns, got {table.shape}")
    grid = GridSpec(ndim, counts, lengths, boundary)
    return ScalarField(grid, table[:, -1].reshape(counts))


def read_field(path, boundary: Boundary | str = Boundary.PERIODIC) -> ScalarField:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FieldIOError(f"cannot read {path}: {exc}") from exc
    boundary = Boundary(boundary)
    try:
        if data[:4] == MAGIC:
            return _read_binary(data, boundary)
        return _read_csv(data.decode("utf-8"), boundary)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise FieldIOError(f"malformed field file {path}: {exc}") from exc
