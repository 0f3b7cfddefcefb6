"""Trajectory persistence: long-form CSV and a little-endian binary layout.

Binary layout (all little-endian):

    bytes 0-3   magic b"SNLS"
    u32         format version (1)
    u64         n, grid points
    u64         count, stored snapshots
    f64         L, half-period
    f64[count]  times
    f64[count*n*2]  states, row-major, interleaved (re, im)
    f64[count]  running X2^5 values
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .grid import make_grid

MAGIC = b"SNLS"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


class FormatError(ValueError):
    pass


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    """Columns ``t, x, re, im``; one row per (snapshot, grid point)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "re", "im"])
        xs = [repr(float(x)) for x in traj.grid.x]
        for t, u in zip(traj.times, traj.states):
            ts = repr(float(t))
            for xv, z in zip(xs, u):
                w.writerow([ts, xv, repr(float(z.real)), repr(float(z.imag))])
    return path


def read_trajectory_csv(path, L: float) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    count = times.size
    n = data.shape[0] // count
    if n * count != data.shape[0]:
        raise FormatError("ragged trajectory CSV")
    grid = make_grid(L, n)
    states = (data[:, 2] + 1j * data[:, 3]).reshape(count, n)
    dt = float(times[1] - times[0]) if count > 1 else 0.0
    return Trajectory(grid, data[::n, 0].copy(), states, np.zeros(count), dt)


def write_trajectory_bin(traj: Trajectory, path) -> Path:
    path = Path(path)
    count, n = traj.states.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, count))
        fh.write(struct.pack("<d", traj.grid.L))
        fh.write(np.asarray(traj.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(traj.states, dtype="<c16").tobytes())
        fh.write(np.asarray(traj.running, dtype="<f8").tobytes())
    return path


def read_trajectory_bin(path) -> Trajectory:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + 8:
        raise FormatError("file too short")
    magic, version, n, count = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    expected = _HEADER.size + 8 + 8 * count * (2 + 2 * n)
    if len(raw) != expected:
        raise FormatError(f"size {len(raw)} != expected {expected}")
    off = _HEADER.size
    (L,) = struct.unpack_from("<d", raw, off)
    off += 8
    times = np.frombuffer(raw, "<f8", count, off).copy()
    off += 8 * count
    states = np.frombuffer(raw, "<c16", count * n, off).reshape(count, n).copy()
    off += 16 * count * n
    running = np.frombuffer(raw, "<f8", count, off).copy()
    dt = float(times[1] - times[0]) if count > 1 else 0.0
    return Trajectory(make_grid(L, n), times, states, running, dt)


def write_norms_csv(traj: Trajectory, path) -> Path:
    """Per-snapshot ``t, mass, l10, running_x2`` with the running X2 norm."""
    from .grid import lp_norms_batch

    path = Path(path)
    mass = np.sum(np.abs(traj.states) ** 2, axis=1) * traj.grid.dx
    l10 = lp_norms_batch(traj.states, 10, traj.grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mass", "l10", "x2"])
        for row in zip(traj.times, mass, l10, np.asarray(traj.running) ** 0.2):
            w.writerow([repr(float(v)) for v in row])
    return path
