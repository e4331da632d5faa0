"""TrajectoryBatch export.

CSV: header ``realization,t,value`` then one row per (realization, time), floats
with 17 significant digits and LF line endings.

Binary: a 16-byte header (``b"OUTB"`` then little-endian uint32 ``N``, ``R``,
``T``) followed by the ``R x T`` values as little-endian float64, row-major.
"""
import struct

import numpy as np

from .params import TrajectoryBatch

MAGIC = b"OUTB"
_HEADER = struct.Struct("<4sIII")


def write_csv(batch, path):
    R, T = batch.values.shape
    with open(path, "w", newline="\n") as fh:
        fh.write("realization,t,value\n")
        ts = [f"{t:.17g}" for t in batch.t_grid]
        for r in range(R):
            row = batch.values[r]
            fh.write("".join(f"{r},{ts[j]},{row[j]:.17g}\n" for j in range(T)))


def write_binary(batch, path):
    R, T = batch.values.shape
    N = int(batch.meta.get("N", 1))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, N, R, T))
        fh.write(np.ascontiguousarray(batch.values, dtype="<f8").tobytes())


def read_binary(path, process_id="Z", t_grid=None):
    """Inverse of :func:`write_binary`; the time grid is not stored."""
    with open(path, "rb") as fh:
        magic, N, R, T = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a trajectory file")
        values = np.frombuffer(fh.read(), dtype="<f8").reshape(R, T).astype(float)
    if t_grid is None:
        t_grid = np.arange(T, dtype=float)
    return TrajectoryBatch(process_id, values, np.asarray(t_grid, dtype=float), {"N": N})


def export(batch, path, fmt="csv"):
    if fmt == "csv":
        write_csv(batch, path)
    elif fmt == "binary":
        write_binary(batch, path)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
