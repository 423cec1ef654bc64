"""NDJSON time series and binary field snapshots.

A series file holds one JSON object per line: a ``manifest`` line (resolved
configuration, its content hash, and the only wall-clock fields), then
``record`` lines, then a ``summary`` line.  A run that fails part-way ends
with an ``aborted`` line instead of the summary.

Snapshots are a fixed 32-byte little-endian header followed by ``n*n``
float64 physical values in row-major ``[iy, ix]`` order.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
import platform
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import __version__
from .dynamics import SimState
from .spectral import GridSpec, PhysicalField, SpectralField, forward, inverse

__all__ = [
    "SeriesWriter",
    "write_series",
    "read_series",
    "SnapshotFormatError",
    "SnapshotHeader",
    "write_snapshot",
    "read_snapshot",
    "KIND_VORTICITY",
    "KIND_STREAMFUNCTION",
    "KIND_FORCING",
]

MAGIC = b"BPNS"
VERSION = 1
_HEADER = struct.Struct("<4sIIddI")
KIND_VORTICITY, KIND_STREAMFUNCTION, KIND_FORCING = 0, 1, 2
_KINDS = {KIND_VORTICITY: "vorticity", KIND_STREAMFUNCTION: "streamfunction", KIND_FORCING: "forcing"}


def _clean(value):
    """JSON-safe conversion: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return value


def _dumps(obj: dict) -> str:
    return json.dumps(_clean(obj), separators=(",", ":"), allow_nan=False)


class SeriesWriter:
    """Line-flushed NDJSON writer; use as a context manager.

    Leaving the context through an exception appends an ``aborted`` line
    carrying the error message and re-raises.
    """

    def __init__(self, path, config: dict | None = None, config_hash: str | None = None,
                 extra: dict | None = None):
        self.path = os.fspath(path)
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        manifest = {
            "type": "manifest",
            "package_version": __version__,
            "config_hash": config_hash,
            "config": config,
            "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "host": platform.node(),
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        if extra:
            manifest.update(extra)
        self._write(manifest)
        self.count = 0
        self.closed = False

    def _write(self, obj: dict):
        self._fh.write(_dumps(obj) + "\n")
        self._fh.flush()

    def record(self, rec: dict):
        self._write({"type": "record", **rec})
        self.count += 1

    def summary(self, summ: dict):
        self._write({"type": "summary", "records": self.count, **summ})
        self.close()

    def abort(self, error: str):
        if not self.closed:
            self._write({"type": "aborted", "records": self.count, "error": error})
            self.close()

    def close(self):
        if not self.closed:
            self._fh.close()
            self.closed = True

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.abort(f"{exc_type.__name__}: {exc}")
        else:
            self.close()
        return False


def write_series(records: Iterable[dict], path, config: dict | None = None,
                 config_hash: str | None = None, summary: dict | None = None) -> int:
    """Write manifest, ``records`` and a summary line; returns the record count."""
    with SeriesWriter(path, config, config_hash) as w:
        for rec in records:
            w.record(rec)
        w.summary(summary or {})
        return w.count


def read_series(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class SnapshotFormatError(ValueError):
    """Malformed snapshot file."""


@dataclass(frozen=True)
class SnapshotHeader:
    version: int
    n: int
    L: float
    t: float
    kind: int

    @property
    def kind_name(self) -> str:
        return _KINDS.get(self.kind, f"unknown({self.kind})")


def write_snapshot(path, field: SimState | SpectralField | PhysicalField, t: float = 0.0,
                   kind: int = KIND_VORTICITY):
    """Write the physical values of ``field`` (a state's vorticity for :class:`SimState`)."""
    if isinstance(field, SimState):
        t = field.t
        field = field.omega
    if isinstance(field, SpectralField):
        field = inverse(field)
    if kind not in _KINDS:
        raise SnapshotFormatError(f"unknown field kind {kind}")
    grid = field.grid
    values = np.ascontiguousarray(field.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.n, float(grid.L), float(t), kind))
        fh.write(values.tobytes(order="C"))
    return path


def _read_raw(path) -> tuple[SnapshotHeader, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise SnapshotFormatError(
            f"snapshot too short: {len(blob)} bytes, header needs {_HEADER.size}")
    magic, version, n, L, t, kind = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    expected = n * n * 8
    got = len(blob) - _HEADER.size
    if got != expected:
        raise SnapshotFormatError(f"payload length {got} bytes, expected {expected} for n={n}")
    values = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(n, n).astype(float)
    return SnapshotHeader(version, n, L, t, kind), values


def read_snapshot(path, as_state: bool = True):
    """Read a snapshot.

    Returns a :class:`SimState` (spectral vorticity, mean removed) when
    ``as_state`` is true and the field is a vorticity; otherwise a pair
    ``(header, PhysicalField)`` with the raw values.
    """
    header, values = _read_raw(path)
    try:
        grid = GridSpec(header.L, header.n)
    except ValueError as exc:
        raise SnapshotFormatError(f"invalid grid in header: {exc}") from None
    phys = PhysicalField(grid, values)
    if as_state and header.kind == KIND_VORTICITY:
        return SimState(header.t, forward(phys, mean_zero=True))
    return header, phys
