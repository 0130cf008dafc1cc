import os
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import TypeAdapter, ValidationError

from vortexlab.fieldio import REPORT_CSV, SUMMARY_JSON, TRACE_CSV
from vortexlab.loader import LoadError, load_csv_rows, load_json
from vortexlab.models import RateSummaryOut, RunIndexItem, RunIndexOut, TraceRowOut


def _raise_for(err: LoadError) -> None:
    if err.kind == "not_found":
        raise HTTPException(status_code=404, detail=err.detail)
    raise HTTPException(status_code=500, detail=err.detail)


def create_app(data_root: Path | None = None) -> FastAPI:
    """Read-only API over a directory of run outputs.

    Results directory resolution order (unless explicitly provided):
      1. Env var VORTEXLAB_RESULTS_DIR
      2. <repo_root>/runs

    Each subdirectory holding a summary.json is one run. Runs are never
    started through the API.
    """
    repo_root = Path(__file__).resolve().parents[1]
    if data_root is not None:
        results_dir = Path(data_root)
    else:
        env_results = os.getenv("VORTEXLAB_RESULTS_DIR")
        results_dir = Path(env_results) if env_results else repo_root / "runs"

    app = FastAPI(title="vortexlab results API")

    trace_adapter = TypeAdapter(list[TraceRowOut])

    # -----------------------
    # CORS: same-origin only unless VORTEXLAB_ALLOW_ORIGINS lists origins (or "*")
    # -----------------------
    origins = [o.strip() for o in os.getenv("VORTEXLAB_ALLOW_ORIGINS", "").split(",")]
    origins = [o for o in origins if o]
    if origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"] if "*" in origins else origins,
            allow_methods=["GET"],
        )

    @app.get("/health")
    def health():  # pragma: no cover - trivial
        return {"status": "ok"}

    def _run_dir(name: str) -> Path:
        path = results_dir / name
        # names are single path components
        if name in {"", ".", ".."} or Path(name).name != name or not path.is_dir():
            raise HTTPException(status_code=404, detail=f"run {name!r} not found")
        return path

    def _summary(name: str) -> dict[str, Any]:
        data, err = load_json(_run_dir(name) / SUMMARY_JSON)
        if err:
            _raise_for(err)
        if not isinstance(data, dict):
            raise HTTPException(status_code=500, detail=f"{SUMMARY_JSON} root must be a mapping")
        return data

    @app.get("/api/runs", response_model=RunIndexOut)
    def api_runs():
        if not results_dir.exists():
            return {"runs": []}
        items: list[RunIndexItem] = []
        for p in sorted(d for d in results_dir.iterdir() if d.is_dir()):
            if not (p / SUMMARY_JSON).exists():
                continue
            data, err = load_json(p / SUMMARY_JSON)
            if err:
                items.append(RunIndexItem(name=p.name, error=err.kind))
            elif isinstance(data, dict):
                items.append(RunIndexItem(name=p.name, kind=data.get("kind")))
            else:
                items.append(RunIndexItem(name=p.name, error="root_not_mapping"))
        return {"runs": items}

    @app.get("/api/runs/{name}/summary")
    def api_summary(name: str) -> dict[str, Any]:
        data = _summary(name)
        if data.get("kind") != "rate_sweep":
            return data
        try:
            validated = RateSummaryOut.model_validate(data)
        except ValidationError as e:
            raise HTTPException(
                status_code=500,
                detail={"file": SUMMARY_JSON, "errors": e.errors(include_url=False)},
            ) from e
        return {"kind": "rate_sweep", **validated.model_dump()}

    @app.get("/api/runs/{name}/trace", response_model=list[TraceRowOut])
    def api_trace(name: str):
        rows, err = load_csv_rows(_run_dir(name) / TRACE_CSV)
        if err:
            _raise_for(err)
        try:
            return trace_adapter.validate_python(rows)
        except ValidationError as e:
            raise HTTPException(
                status_code=500,
                detail={"file": TRACE_CSV, "errors": e.errors(include_url=False)},
            ) from e

    @app.get("/api/runs/{name}/report")
    def api_report(name: str) -> list[dict[str, float]]:
        rows, err = load_csv_rows(_run_dir(name) / REPORT_CSV)
        if err:
            _raise_for(err)
        return rows

    return app
