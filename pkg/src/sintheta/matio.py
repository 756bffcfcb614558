"""Matrix file formats: CSV and a raw little-endian binary layout.

Binary layout: two unsigned 64-bit little-endian integers (rows, cols)
followed by rows*cols IEEE-754 doubles in row-major order.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .linalg import as_matrix

_HEADER = np.dtype("<u8")
_BODY = np.dtype("<f8")


def write_csv(path, M):
    M = as_matrix(M)
    np.savetxt(path, M, delimiter=",", fmt="%.17g")


def read_csv(path):
    M = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return as_matrix(M, str(path))


def write_binary(path, M):
    M = as_matrix(M)
    with open(path, "wb") as fh:
        fh.write(np.asarray(M.shape, dtype=_HEADER).tobytes())
        fh.write(np.ascontiguousarray(M, dtype=_BODY).tobytes())


def read_binary(path):
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise ValueError(f"{path}: truncated header")
    rows, cols = (int(x) for x in np.frombuffer(raw[:16], dtype=_HEADER))
    body = np.frombuffer(raw[16:], dtype=_BODY)
    if body.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {body.size}")
    return as_matrix(body.reshape(rows, cols).copy(), str(path))


def read_matrix(path):
    """Load a matrix, choosing the format by extension (.csv or anything else = binary)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv(path)
    return read_binary(path)


def write_matrix(path, M):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        write_csv(path, M)
    else:
        write_binary(path, M)
