"""Binary field files, trajectory checkpoints, manifests and result tables.

Field file: ``<8s I I d`` header (magic ``VLFIELD1``, M, components, L), then
the M x M (x components) values as little-endian float64 in row-major order.

Trajectory file: ``<8s I d I I`` header (magic ``VLTRAJ01``, N, dt, steps,
frames), then frame times, frame shifts (frames x 2) and relative positions
(frames x N x 2), all little-endian float64.

Readers never raise; they return ``(data, LoadError | None)`` like ``load_json``.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from vortexlab.errors import VortexLabError
from vortexlab.fields import GridField
from vortexlab.infometrics import EntropyTrace
from vortexlab.kernels import KernelTable
from vortexlab.loader import LoadError, load_csv_rows, load_json
from vortexlab.mollifier import MollifierSpec
from vortexlab.particles import Trajectory
from vortexlab.pde import LimitSolution, ShiftPath

FIELD_MAGIC = b"VLFIELD1"
FIELD_HEADER = struct.Struct("<8sIId")
TRAJ_MAGIC = b"VLTRAJ01"
TRAJ_HEADER = struct.Struct("<8sIdII")
FLOAT = np.dtype("<f8")

MANIFEST = "manifest.json"
TRACE_CSV = "trace.csv"
REPORT_CSV = "rate_report.csv"
SUMMARY_JSON = "summary.json"


# --------------------
# Fields
# --------------------
def write_field(path: Path, field: GridField) -> Path:
    header = FIELD_HEADER.pack(FIELD_MAGIC, field.M, field.components, float(field.L))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + np.ascontiguousarray(field.values, dtype=FLOAT).tobytes())
    return path


def read_field(path: Path) -> tuple[GridField | None, LoadError | None]:
    if not path.exists():
        return None, LoadError("not_found", f"{path.name} not found")
    try:
        raw = path.read_bytes()
    except OSError as e:
        return None, LoadError("io_error", f"Failed reading {path.name}: {e}")
    if len(raw) < FIELD_HEADER.size:
        return None, LoadError("truncated", f"{path.name} is shorter than its header")
    magic, M, components, L = FIELD_HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        return None, LoadError("bad_magic", f"{path.name} is not a field file")
    count = M * M * components
    payload = raw[FIELD_HEADER.size :]
    if len(payload) != count * FLOAT.itemsize:
        return None, LoadError("truncated", f"{path.name} payload does not match M={M}")
    values = np.frombuffer(payload, dtype=FLOAT).astype(float)
    shape = (M, M) if components == 1 else (M, M, components)
    try:
        return GridField(values.reshape(shape), L), None
    except VortexLabError as e:
        return None, LoadError("invalid_field", f"{path.name}: {e.detail}")


def write_table(path: Path, table: KernelTable) -> Path:
    return write_field(path, table.field)


def read_table(path: Path, spec: MollifierSpec) -> tuple[KernelTable | None, LoadError | None]:
    field, err = read_field(path)
    if err:
        return None, err
    try:
        return KernelTable.from_field(field, spec), None
    except VortexLabError as e:
        return None, LoadError("invalid_table", f"{path.name}: {e.detail}")


# --------------------
# Trajectories
# --------------------
def write_trajectory(path: Path, trajectory: Trajectory) -> Path:
    header = TRAJ_HEADER.pack(
        TRAJ_MAGIC, trajectory.N, trajectory.dt, trajectory.steps, trajectory.frames
    )
    body = b"".join(
        np.ascontiguousarray(a, dtype=FLOAT).tobytes()
        for a in (trajectory.times, trajectory.shifts, trajectory.relative)
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + body)
    return path


def read_trajectory(path: Path) -> tuple[Trajectory | None, LoadError | None]:
    if not path.exists():
        return None, LoadError("not_found", f"{path.name} not found")
    try:
        raw = path.read_bytes()
    except OSError as e:
        return None, LoadError("io_error", f"Failed reading {path.name}: {e}")
    if len(raw) < TRAJ_HEADER.size:
        return None, LoadError("truncated", f"{path.name} is shorter than its header")
    magic, N, dt, steps, frames = TRAJ_HEADER.unpack_from(raw)
    if magic != TRAJ_MAGIC:
        return None, LoadError("bad_magic", f"{path.name} is not a trajectory file")
    data = np.frombuffer(raw[TRAJ_HEADER.size :], dtype=FLOAT).astype(float)
    expected = frames * (1 + 2 + 2 * N)
    if data.size != expected:
        return None, LoadError("truncated", f"{path.name} holds {data.size} of {expected} values")
    times = data[:frames]
    shifts = data[frames : 3 * frames].reshape(frames, 2)
    relative = data[3 * frames :].reshape(frames, N, 2)
    return Trajectory(times, relative, shifts, dt, steps), None


# --------------------
# Limit solutions
# --------------------
def write_solution(directory: Path, sol: LimitSolution) -> Path:
    """Snapshots as field files plus a manifest of (t, file, X_t)."""
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, (t, snap) in enumerate(zip(sol.times, sol.snapshots, strict=True)):
        name = f"rho_{k:04d}.bin"
        write_field(directory / name, snap)
        entries.append({"t": float(t), "file": name, "shift": sol.shift_at(float(t)).tolist()})
    path = directory / MANIFEST
    path.write_text(json.dumps(entries, indent=2), encoding="utf-8")
    return path


def read_solution(directory: Path) -> tuple[LimitSolution | None, LoadError | None]:
    entries, err = load_json(directory / MANIFEST)
    if err:
        return None, err
    if not isinstance(entries, list) or not entries:
        return None, LoadError("invalid_manifest", f"{MANIFEST} must be a non-empty list")
    snapshots = []
    for entry in entries:
        field, err = read_field(directory / entry["file"])
        if err:
            return None, err
        snapshots.append(field)
    times = np.array([float(e["t"]) for e in entries])
    shifts = np.array([e.get("shift", [0.0, 0.0]) for e in entries], dtype=float)
    path = ShiftPath(times, shifts) if np.any(shifts) else None
    return LimitSolution(times, tuple(snapshots), path), None


# --------------------
# Result tables
# --------------------
def _write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows([[repr(float(v)) for v in row] for row in rows])
    return path


def write_trace_csv(path: Path, trace: EntropyTrace) -> Path:
    return _write_csv(path, EntropyTrace.COLUMNS, trace.rows())


def read_trace_csv(path: Path) -> tuple[EntropyTrace | None, LoadError | None]:
    rows, err = load_csv_rows(path)
    if err:
        return None, err
    try:
        return EntropyTrace.from_rows([[r[c] for c in EntropyTrace.COLUMNS] for r in rows]), None
    except KeyError as e:
        return None, LoadError("invalid_csv", f"{path.name} lacks column {e}")


def write_rate_report(directory: Path, report) -> tuple[Path, Path]:
    """rate_report.csv (one row per N) and summary.json."""
    csv_path = _write_csv(directory / REPORT_CSV, report.CSV_COLUMNS, report.rows())
    summary_path = directory / SUMMARY_JSON
    summary = {"kind": "rate_sweep", **report.summary()}
    summary_path.write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return csv_path, summary_path


def write_summary(directory: Path, kind: str, payload: dict) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / SUMMARY_JSON
    path.write_text(json.dumps({"kind": kind, **payload}, indent=2), encoding="utf-8")
    return path


def export_slice_csv(path: Path, field: GridField, component: int = 0) -> Path:
    """``x,value`` along the central row (x2 = 0) for plotting."""
    values = field.values if field.components == 1 else field.values[..., component]
    row = values[:, field.M // 2]
    return _write_csv(path, ("x", "value"), zip(field.axis(), row, strict=True))
