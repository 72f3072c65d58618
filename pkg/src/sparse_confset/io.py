"""Sample serialization.

CSV: header ``y,x_1,...,x_p``, one row per observation.

Binary (little-endian)::

    bytes 0-3    magic b"SCS1"
    bytes 4-7    uint32 flags (bit 0: theta present, bit 1: seed present)
    bytes 8-15   uint64 n
    bytes 16-23  uint64 p
    bytes 24-31  uint64 seed (0 when absent)
    then         float64[n]      Y
                 float64[n * p]  X, column-major (column 1 first)
                 float64[p]      theta (only when flag bit 0 is set)
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .synth import LinearSample

MAGIC = b"SCS1"
_HEADER = struct.Struct("<4sIQQQ")


def write_sample_csv(sample: LinearSample, path) -> None:
    p = sample.X.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y"] + [f"x_{j}" for j in range(1, p + 1)])
        for y, row in zip(sample.Y, sample.X):
            w.writerow([repr(float(y))] + [repr(float(v)) for v in row])


def read_sample_csv(path) -> LinearSample:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    expected = ["y"] + [f"x_{j}" for j in range(1, len(header))]
    if header != expected:
        raise ValueError(f"{path}: header must be y,x_1..x_p, got {','.join(header[:4])}...")
    data = np.array(rows[1:], dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two observations")
    return LinearSample(X=np.ascontiguousarray(data[:, 1:]), theta_true=None, Y=data[:, 0].copy())


def write_sample_binary(sample: LinearSample, path) -> None:
    n, p = sample.X.shape
    flags = (sample.theta_true is not None) | ((sample.seed is not None) << 1)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, flags, n, p, 0 if sample.seed is None else sample.seed))
        fh.write(np.asarray(sample.Y, dtype="<f8").tobytes())
        fh.write(np.asarray(sample.X, dtype="<f8").tobytes(order="F"))
        if sample.theta_true is not None:
            fh.write(np.asarray(sample.theta_true, dtype="<f8").tobytes())


def read_sample_binary(path) -> LinearSample:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, flags, n, p, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a sample file (magic {magic!r})")
    want = _HEADER.size + 8 * (n + n * p + (p if flags & 1 else 0))
    if len(raw) != want:
        raise ValueError(f"{path}: expected {want} bytes, found {len(raw)}")
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    Y = vals[:n].copy()
    X = vals[n:n + n * p].reshape((n, p), order="F").copy()
    theta = vals[n + n * p:].copy() if flags & 1 else None
    return LinearSample(X=X, theta_true=theta, Y=Y, seed=seed if flags & 2 else None)
