import csv
import json

import numpy as np
import pytest
from conftest import build_gaussian_field, build_spec

from vortexlab import fieldio
from vortexlab.fields import GridField
from vortexlab.harness import RateReport, rate_targets
from vortexlab.infometrics import EntropyTrace, KRBracket
from vortexlab.kernels import build_interaction_table
from vortexlab.particles import Trajectory
from vortexlab.pde import LimitSolution, ShiftPath


def _trajectory(N: int = 5, frames: int = 3) -> Trajectory:
    rng = np.random.default_rng(0)
    return Trajectory(
        times=np.linspace(0.0, 0.02, frames),
        relative=rng.normal(size=(frames, N, 2)),
        shifts=rng.normal(size=(frames, 2)),
        dt=0.01,
        steps=2,
    )


def test_field_file_round_trip(tmp_path):
    field = build_gaussian_field(L=5.0, M=16)
    path = fieldio.write_field(tmp_path / "rho.bin", field)
    assert path.stat().st_size == fieldio.FIELD_HEADER.size + 16 * 16 * 8
    back, err = fieldio.read_field(path)
    assert err is None
    assert back.L == 5.0
    np.testing.assert_array_equal(back.values, field.values)


def test_vector_field_keeps_components(tmp_path):
    values = np.arange(8 * 8 * 2, dtype=float).reshape(8, 8, 2)
    back, err = fieldio.read_field(fieldio.write_field(tmp_path / "v.bin", GridField(values, 2.0)))
    assert err is None
    assert back.components == 2
    np.testing.assert_array_equal(back.values, values)


def test_field_file_errors(tmp_path):
    _, err = fieldio.read_field(tmp_path / "absent.bin")
    assert err.kind == "not_found"

    short = tmp_path / "short.bin"
    short.write_bytes(b"VLFIELD1")
    assert fieldio.read_field(short)[1].kind == "truncated"

    wrong = tmp_path / "wrong.bin"
    wrong.write_bytes(fieldio.TRAJ_HEADER.pack(fieldio.TRAJ_MAGIC, 1, 0.1, 1, 1) + b"\0" * 64)
    assert fieldio.read_field(wrong)[1].kind == "bad_magic"

    path = fieldio.write_field(tmp_path / "cut.bin", build_gaussian_field(L=5.0, M=16))
    path.write_bytes(path.read_bytes()[:-8])
    assert fieldio.read_field(path)[1].kind == "truncated"


def test_table_file_rebuilds_the_spectrum(tmp_path):
    spec = build_spec()
    table = build_interaction_table(spec, 16.0, 256)
    path = fieldio.write_table(tmp_path / "table.bin", table)
    back, err = fieldio.read_table(path, spec)
    assert err is None
    np.testing.assert_array_equal(back.field.values, table.field.values)
    scale = np.abs(table.spectrum).max()
    np.testing.assert_allclose(back.spectrum, table.spectrum, atol=1e-9 * scale)


def test_scalar_field_is_not_a_table(tmp_path):
    path = fieldio.write_field(tmp_path / "rho.bin", build_gaussian_field(L=5.0, M=16))
    table, err = fieldio.read_table(path, build_spec())
    assert table is None
    assert err.kind == "invalid_table"


def test_trajectory_round_trip(tmp_path):
    trajectory = _trajectory()
    path = fieldio.write_trajectory(tmp_path / "trajectory.bin", trajectory)
    back, err = fieldio.read_trajectory(path)
    assert err is None
    assert (back.N, back.frames, back.steps, back.dt) == (5, 3, 2, 0.01)
    np.testing.assert_array_equal(back.times, trajectory.times)
    np.testing.assert_array_equal(back.positions(2), trajectory.positions(2))


def test_trajectory_size_mismatch(tmp_path):
    path = fieldio.write_trajectory(tmp_path / "trajectory.bin", _trajectory())
    path.write_bytes(path.read_bytes()[:-16])
    back, err = fieldio.read_trajectory(path)
    assert back is None
    assert err.kind == "truncated"
    assert "holds" in err.detail


def test_solution_directory_round_trip(tmp_path):
    times = np.array([0.0, 0.1, 0.2])
    snaps = tuple(build_gaussian_field(L=5.0, M=16, variance=1.0 + t) for t in times)
    path = ShiftPath(times, np.array([[0.0, 0.0], [0.1, -0.2], [0.3, 0.1]]))
    fieldio.write_solution(tmp_path / "pde", LimitSolution(times, snaps, path))

    manifest = json.loads((tmp_path / "pde" / fieldio.MANIFEST).read_text())
    assert [e["file"] for e in manifest] == ["rho_0000.bin", "rho_0001.bin", "rho_0002.bin"]
    assert manifest[1]["shift"] == pytest.approx([0.1, -0.2])

    back, err = fieldio.read_solution(tmp_path / "pde")
    assert err is None
    np.testing.assert_allclose(back.times, times)
    np.testing.assert_array_equal(back.snapshots[2].values, snaps[2].values)
    np.testing.assert_allclose(back.shift_at(0.2), [0.3, 0.1])


def test_unshifted_solution_reads_without_path(tmp_path):
    times = np.array([0.0, 0.1])
    snaps = tuple(build_gaussian_field(L=5.0, M=16) for _ in times)
    fieldio.write_solution(tmp_path, LimitSolution(times, snaps))
    back, err = fieldio.read_solution(tmp_path)
    assert err is None
    assert back.shift_path is None


def test_solution_errors(tmp_path):
    assert fieldio.read_solution(tmp_path)[1].kind == "not_found"
    (tmp_path / fieldio.MANIFEST).write_text("[]")
    assert fieldio.read_solution(tmp_path)[1].kind == "invalid_manifest"


def test_trace_csv_round_trip(tmp_path):
    trace = EntropyTrace()
    trace.append(0.0, 0.01, 0.2, 0.05, KRBracket(0.01, 0.03), 0.0)
    trace.append(0.1, 0.015, 0.25, 0.06, KRBracket(0.02, 0.04), 0.3)
    path = fieldio.write_trace_csv(tmp_path / fieldio.TRACE_CSV, trace)
    with path.open(newline="") as fh:
        assert next(csv.reader(fh)) == list(EntropyTrace.COLUMNS)
    back, err = fieldio.read_trace_csv(path)
    assert err is None
    assert back.rows() == trace.rows()


def test_trace_csv_missing_column(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("t,H\n0.0,0.1\n", encoding="utf-8")
    back, err = fieldio.read_trace_csv(path)
    assert back is None
    assert err.kind == "invalid_csv"


def test_rate_report_files(tmp_path):
    report = RateReport(
        Ns=[250, 500],
        sup_H=[0.2, 0.1],
        sup_H_floored=[0.19, 0.09],
        slope=None,
        slope_ci=(None, None),
        targets=rate_targets(0.2, 1.1),
        exit_fractions=[0.0, 0.0],
        exit_bounds=[0.5, 0.3],
        h_floor=0.01,
        initial_entropy=[0.05, 0.03],
        qv=[1.0, 1.2],
        qv_slope=None,
        seeds=4,
    )
    csv_path, summary_path = fieldio.write_rate_report(tmp_path, report)
    with csv_path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["N"]) for r in rows] == [250.0, 500.0]
    assert float(rows[1]["exit_bound"]) == 0.3
    summary = json.loads(summary_path.read_text())
    assert summary["kind"] == "rate_sweep"
    assert summary["metadata"]["sup_H_decreasing"] is True
    assert summary["targets"]["theta"] == pytest.approx(0.15)


def test_summary_carries_its_kind(tmp_path):
    path = fieldio.write_summary(tmp_path / "run", "simulate", {"N": 50})
    assert json.loads(path.read_text()) == {"kind": "simulate", "N": 50}


def test_slice_csv_is_the_central_row(tmp_path):
    field = build_gaussian_field(L=5.0, M=16)
    path = fieldio.export_slice_csv(tmp_path / "slice.csv", field)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16
    assert float(rows[8]["x"]) == 0.0
    assert float(rows[8]["value"]) == pytest.approx(field.values[8, 8])
