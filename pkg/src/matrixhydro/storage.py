"""On-disk formats of a run directory.

Layout::

    <run_dir>/config.json          creation-time SimulationConfig
    <run_dir>/diagnostics.csv      one row per output time
    <run_dir>/snapshots/snap_<index>.dat
    <run_dir>/checkpoint.dat

All binary fields are little-endian.  Snapshot::

    b"MHS1" | u32 N | u32 index | f64 time | u64 count | count * f64 coefficients

Checkpoint::

    b"MHC1" | u32 N | f64 time | u64 step | 2 N**2 * f64 (row-major W, re/im interleaved)
"""

from __future__ import annotations

import csv
import os
import struct
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Snapshot",
    "Checkpoint",
    "CSV_HEADER",
    "write_snapshot",
    "read_snapshot",
    "write_checkpoint",
    "read_checkpoint",
    "RunStore",
    "RunLockedError",
]

SNAPSHOT_MAGIC = b"MHS1"
CHECKPOINT_MAGIC = b"MHC1"
_SNAP_HEAD = struct.Struct("<4sIIdQ")
_CKPT_HEAD = struct.Struct("<4sIdQ")

CSV_HEADER = [
    "time",
    "energy",
    "enstrophy",
    "casimir3",
    "casimir4",
    "mom_x",
    "mom_y",
    "mom_z",
    "fp_iters",
]


class RunLockedError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Snapshot:
    n: int
    index: int
    time: float
    coeffs: np.ndarray


@dataclass(frozen=True, eq=False)
class Checkpoint:
    n: int
    time: float
    step: int
    w: np.ndarray


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def write_snapshot(path, n: int, index: int, time: float, coeffs: np.ndarray) -> None:
    coeffs = np.ascontiguousarray(coeffs, dtype="<f8")
    head = _SNAP_HEAD.pack(SNAPSHOT_MAGIC, n, index, time, coeffs.size)
    _atomic_write(Path(path), head + coeffs.tobytes())


def read_snapshot(path) -> Snapshot:
    data = Path(path).read_bytes()
    if len(data) < _SNAP_HEAD.size:
        raise ValueError(f"{path}: truncated snapshot")
    magic, n, index, time, count = _SNAP_HEAD.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: bad snapshot magic {magic!r}")
    body = data[_SNAP_HEAD.size :]
    if len(body) != 8 * count:
        raise ValueError(f"{path}: expected {count} coefficients, found {len(body) // 8}")
    coeffs = np.frombuffer(body, dtype="<f8").astype(float)
    return Snapshot(n, index, time, coeffs)


def write_checkpoint(path, time: float, step: int, w: np.ndarray) -> None:
    w = np.ascontiguousarray(w, dtype="<c16")
    n = w.shape[0]
    head = _CKPT_HEAD.pack(CHECKPOINT_MAGIC, n, time, step)
    _atomic_write(Path(path), head + w.tobytes())


def read_checkpoint(path) -> Checkpoint:
    data = Path(path).read_bytes()
    if len(data) < _CKPT_HEAD.size:
        raise ValueError(f"{path}: truncated checkpoint")
    magic, n, time, step = _CKPT_HEAD.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad checkpoint magic {magic!r}")
    body = data[_CKPT_HEAD.size :]
    if len(body) != 16 * n * n:
        raise ValueError(f"{path}: checkpoint body does not hold a {n}x{n} matrix")
    w = np.frombuffer(body, dtype="<c16").astype(complex).reshape(n, n)
    return Checkpoint(n, time, step, w)


class RunStore:
    """Paths and bookkeeping of one run directory."""

    def __init__(self, root):
        self.root = Path(root)

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    @property
    def csv_path(self) -> Path:
        return self.root / "diagnostics.csv"

    @property
    def checkpoint_path(self) -> Path:
        return self.root / "checkpoint.dat"

    @property
    def snapshot_dir(self) -> Path:
        return self.root / "snapshots"

    @property
    def lock_path(self) -> Path:
        return self.root / ".lock"

    def snapshot_path(self, index: int) -> Path:
        return self.snapshot_dir / f"snap_{index}.dat"

    def snapshot_indices(self) -> list[int]:
        if not self.snapshot_dir.is_dir():
            return []
        found = []
        for p in self.snapshot_dir.glob("snap_*.dat"):
            try:
                found.append(int(p.stem.split("_", 1)[1]))
            except ValueError:
                continue
        return sorted(found)

    def resolve_index(self, index: int) -> int:
        indices = self.snapshot_indices()
        if not indices:
            raise FileNotFoundError(f"no snapshots in {self.snapshot_dir}")
        if index < 0:
            index = indices[-1] + 1 + index
        if index not in indices:
            raise FileNotFoundError(f"snapshot {index} not found in {self.snapshot_dir}")
        return index

    def read_snapshot(self, index: int = -1) -> Snapshot:
        return read_snapshot(self.snapshot_path(self.resolve_index(index)))

    def prepare(self) -> None:
        self.snapshot_dir.mkdir(parents=True, exist_ok=True)

    @contextmanager
    def lock(self):
        self.root.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunLockedError(
                f"{self.root} is locked by another writer (remove {self.lock_path} if stale)"
            ) from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield self
        finally:
            self.lock_path.unlink(missing_ok=True)

    def start_csv(self) -> None:
        with open(self.csv_path, "w", newline="") as fh:
            csv.writer(fh).writerow(CSV_HEADER)

    def append_csv(self, row) -> None:
        with open(self.csv_path, "a", newline="") as fh:
            csv.writer(fh).writerow([repr(v) if isinstance(v, float) else v for v in row])
            fh.flush()
            os.fsync(fh.fileno())

    def read_csv(self) -> list[dict]:
        with open(self.csv_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        out = []
        for r in rows:
            rec = {k: float(v) for k, v in r.items()}
            rec["fp_iters"] = int(rec["fp_iters"])
            out.append(rec)
        return out

    def truncate_after(self, last_index: int) -> None:
        """Drop outputs written after the checkpoint (interrupted output cycle)."""
        for idx in self.snapshot_indices():
            if idx > last_index:
                self.snapshot_path(idx).unlink()
        if not self.csv_path.exists():
            return
        with open(self.csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        kept = rows[: last_index + 2]
        if len(kept) != len(rows):
            with open(self.csv_path, "w", newline="") as fh:
                csv.writer(fh).writerows(kept)
