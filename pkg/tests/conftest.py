import json
import sys
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from vortexlab.api import create_app
from vortexlab.config import parse_config
from vortexlab.fields import GridField, grid_points
from vortexlab.mollifier import MollifierSpec


# ---------------------------------------------------------------------------
# Helper builders (pure) to create configs, fields and result files for tests
# ---------------------------------------------------------------------------
def build_config_dict(out_dir: str = "runs/test", **sections) -> dict:
    """A config small enough for unit tests: 50-100 particles, 128^2 grid, T = 0.02."""
    data = {
        "mollifier": {"beta": 0.2, "alpha": 1.1, "delta": 0.01},
        "noise": {"seed": 7, "sigma": {"matrix": [[1.0, 0.0], [0.0, 1.0]]}},
        "grid": {"L": 4.0, "M": 128},
        "pde": {"dt": 0.005, "T": 0.02},
        "particles": {"dt": 0.005, "N": 50},
        "rho0": {"kind": "gaussian", "mean": [0.0, 0.0], "cov": [[0.16, 0.0], [0.0, 0.16]]},
        "sweep": {"Ns": [50, 100], "seeds": 4, "snapshots": 5},
        "infometrics": {"kr_samples": 128, "kr_repeats": 1},
        "output": {"directory": out_dir},
        "workers": 1,
    }
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    return data


def build_config(out_dir: str = "runs/test", **sections):
    return parse_config(build_config_dict(out_dir, **sections))


def build_gaussian_field(
    L: float = 10.0, M: int = 128, mean=(0.0, 0.0), variance: float = 1.0
) -> GridField:
    d = grid_points(L, M) - np.asarray(mean, dtype=float)
    values = np.exp(-np.sum(d * d, axis=-1) / (2.0 * variance)) / (2.0 * np.pi * variance)
    return GridField(values, L)


def build_spec(N: int = 1000, beta: float = 0.2, alpha: float = 1.1) -> MollifierSpec:
    return MollifierSpec(beta, alpha, N)


def build_trace_rows() -> list[dict]:
    return [
        {"t": 0.0, "H": 0.02, "I": 0.5, "l1": 0.1, "kr_lo": 0.01, "kr_hi": 0.05, "qv_cum": 0.0},
        {"t": 0.1, "H": 0.03, "I": 0.4, "l1": 0.12, "kr_lo": 0.02, "kr_hi": 0.06, "qv_cum": 0.2},
    ]


def build_rate_summary() -> dict:
    return {
        "kind": "rate_sweep",
        "Ns": [250, 500],
        "sup_H": [0.2, 0.1],
        "sup_H_floored": [0.19, 0.09],
        "exit_fractions": [0.0, 0.0],
        "slope": -1.0,
        "slope_ci": [None, None],
        "targets": {"theta": 0.15},
        "h_floor": 0.01,
        "metadata": {"seeds": 4},
    }


def _write_csv(path: Path, rows: list[dict]) -> None:
    header = list(rows[0])
    lines = [",".join(header)] + [",".join(str(r[k]) for k in header) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Results directory fixture for the API factory
# ---------------------------------------------------------------------------
@pytest.fixture()
def results_root(tmp_path: Path) -> Path:
    sweep = tmp_path / "sweep"
    sweep.mkdir()
    (sweep / "summary.json").write_text(json.dumps(build_rate_summary()))
    _write_csv(
        sweep / "rate_report.csv",
        [
            {"N": 250, "sup_H": 0.2, "sup_H_floored": 0.19, "exit_fraction": 0.0,
             "exit_bound": 0.5, "initial_H": 0.05, "qv": 1.0},
            {"N": 500, "sup_H": 0.1, "sup_H_floored": 0.09, "exit_fraction": 0.0,
             "exit_bound": 0.3, "initial_H": 0.03, "qv": 1.2},
        ],
    )

    single = tmp_path / "single"
    single.mkdir()
    (single / "summary.json").write_text(json.dumps({"kind": "entropy", "N": 250}))
    _write_csv(single / "trace.csv", build_trace_rows())

    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "summary.json").write_text("{ not json")

    (tmp_path / "empty").mkdir()
    return tmp_path


# ---------------------------------------------------------------------------
# Additional fixtures
# ---------------------------------------------------------------------------
@pytest.fixture()
def small_config(tmp_path: Path):
    return build_config(out_dir=str(tmp_path / "out"))


@pytest.fixture()
def spec() -> MollifierSpec:
    return build_spec()


# ---------------------------------------------------------------------------
# FastAPI TestClient fixture
# ---------------------------------------------------------------------------
@pytest.fixture()
def app_client(results_root: Path):
    app = create_app(data_root=results_root)
    with TestClient(app) as client:
        yield client
