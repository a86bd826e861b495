"""Matrix and vector file formats.

Binary container layout (all integers little-endian)::

    magic   5 bytes   b"NNSM1"
    m       u64
    n       u64
    layout  u8        0 = row-major, 1 = column-major
    data    m*n little-endian float64 values in the stated layout
"""
import struct

import numpy as np

MAGIC = b"NNSM1"
ROW_MAJOR = 0
COL_MAJOR = 1
_HEADER = struct.Struct("<5sQQB")


class MatrixFormatError(ValueError):
    pass


def save_matrix(path, A, layout=COL_MAJOR):
    a = np.asarray(getattr(A, "array", A), dtype="<f8")
    if a.ndim == 1:
        a = a[:, None]
    if layout not in (ROW_MAJOR, COL_MAJOR):
        raise ValueError(f"unknown layout {layout}")
    m, n = a.shape
    order = "C" if layout == ROW_MAJOR else "F"
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, m, n, layout))
        fh.write(a.tobytes(order=order))


def load_matrix(path):
    """Read a binary container; returns a float64 array of shape (m, n)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise MatrixFormatError(f"{path}: truncated header")
        magic, m, n, layout = _HEADER.unpack(head)
        if magic != MAGIC:
            raise MatrixFormatError(f"{path}: bad magic {magic!r}")
        if layout not in (ROW_MAJOR, COL_MAJOR):
            raise MatrixFormatError(f"{path}: bad layout byte {layout}")
        body = fh.read()
    if len(body) != 8 * m * n:
        raise MatrixFormatError(f"{path}: expected {m * n} values, found {len(body) // 8}")
    flat = np.frombuffer(body, dtype="<f8").astype(np.float64)
    order = "C" if layout == ROW_MAJOR else "F"
    return flat.reshape((m, n), order=order)


def load_csv_matrix(path):
    """Plain CSV, one matrix row per line."""
    a = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if a.size == 0:
        raise MatrixFormatError(f"{path}: empty matrix")
    return a


def load_any(path):
    """Dispatch on content: binary container if the magic matches, else CSV."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) == MAGIC:
            return load_matrix(path)
    return load_csv_matrix(path)


def load_vector(path):
    a = load_any(path)
    if 1 not in a.shape:
        raise MatrixFormatError(f"{path}: expected a vector, got shape {a.shape}")
    return a.ravel()
