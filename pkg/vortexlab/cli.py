"""Command-line entry point: ``vortexlab <command> --config PATH``.

Every command resolves its config (flags > environment > file > defaults),
echoes it into the output directory and writes a ``summary.json`` there.
Library errors map to the stable exit codes in ``vortexlab.errors``.
"""

from __future__ import annotations

import functools
import math
import logging
from pathlib import Path

import click

from vortexlab import fieldio, harness
from vortexlab.config import load_config, write_config_echo
from vortexlab.errors import AssumptionViolation, ConfigError, VortexLabError
from vortexlab.fields import check_inside
from vortexlab.kernels import KernelTable, selftest
from vortexlab.models import AssumptionReport, ExperimentConfig
from vortexlab.mollifier import MollifierSpec
from vortexlab.particles import (
    NoiseConfig,
    SigmaSchedule,
    draw_common_path,
    sample_initial,
    simulate,
)
from vortexlab.pde import (
    boundary_mass,
    check_decay_bounds,
    decay_horizon,
    sample_shift_path,
    total_variation,
)

logger = logging.getLogger("vortexlab")


def _handled(fn):
    """Translate library errors to their exit codes at the process boundary."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except VortexLabError as e:
            click.echo(f"[FAIL] {e.kind}: {e.detail}", err=True)
            raise SystemExit(e.exit_code) from e
        except Exception as e:
            logger.exception("unexpected failure")
            click.echo(f"[FAIL] unexpected: {e}", err=True)
            raise SystemExit(1) from e

    return wrapper


def _config_options(fn):
    fn = click.option("--workers", type=click.IntRange(min=1), default=None)(fn)
    fn = click.option("--out", type=click.Path(path_type=Path), default=None)(fn)
    fn = click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=None)(fn)
    fn = click.option(
        "--config", "config_path", type=click.Path(path_type=Path), default=None
    )(fn)
    return fn


def _resolve(config_path, seed, out, workers) -> tuple[ExperimentConfig, Path]:
    config = load_config(config_path, seed=seed, out=out, workers=workers)
    directory = Path(config.output.directory)
    write_config_echo(config, directory)
    return config, directory


def _load_table(path: Path, config: ExperimentConfig, spec: MollifierSpec) -> KernelTable:
    """Reuse a table written by ``simulate --save-table`` for the same N and config."""
    table, err = fieldio.read_table(path, spec)
    if err:
        raise ConfigError(f"cannot load table {path}: {err.detail}")
    L, M = harness.table_geometry(config, spec)
    if table.M != M or not math.isclose(table.L, L, rel_tol=1e-12):
        raise ConfigError(
            f"table {path.name} has L={table.L:.6g}, M={table.M}; "
            f"this config and N={spec.N} need L={L:.6g}, M={M}"
        )
    logger.info("loaded interaction table %s (L=%.4g, M=%d)", path, L, M)
    return table


def _print_reports(reports: list[AssumptionReport]) -> None:
    for report in reports:
        click.echo(f"[{'OK' if report.passed else 'FAIL'}] {report.name}")
        for violation in report.violations:
            click.echo(f"    - {violation}")
        for warning in report.warnings:
            click.echo(f"[WARN] {report.name}: {warning}")


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="INFO",
    show_default=True,
)
def main(log_level: str) -> None:
    """Moderately interacting vortex particles against their limit equation."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command()
@_config_options
@_handled
def validate(config_path, seed, out, workers) -> None:
    """Run every assumption check; exit 0 iff all pass."""
    config, directory = _resolve(config_path, seed, out, workers)
    summary = harness.validate_experiment(config)
    _print_reports(summary.reports)
    fieldio.write_summary(directory, "validate", summary.model_dump())
    if not summary.passed:
        raise SystemExit(AssumptionViolation.exit_code)


@main.command("solve-pde")
@_config_options
@click.option("--run-index", type=click.IntRange(min=0), default=0, show_default=True)
@_handled
def solve_pde(config_path, seed, out, workers, run_index) -> None:
    """Solve the limit equation and write snapshots, manifest and slices."""
    config, directory = _resolve(config_path, seed, out, workers)
    sol = harness.solve_limit(config)
    noise = NoiseConfig(
        config.noise.seed,
        config.particles.dt,
        SigmaSchedule.from_config(config.noise.sigma),
        run_index,
    )
    draw_common_path(noise, sol.T)
    sol = sol.with_shift(sample_shift_path(noise, sol.T, noise.dt))
    fieldio.write_solution(directory / "pde", sol)
    fieldio.export_slice_csv(directory / "pde" / "rho_final_slice.csv", sol.snapshots[-1])

    payload = {
        "times": [float(t) for t in sol.times],
        "mass": [snap.mass() for snap in sol.snapshots],
        "total_variation": [total_variation(snap) for snap in sol.snapshots],
        "boundary_mass": [boundary_mass(snap) for snap in sol.snapshots],
        "final_shift": sol.shift_at(sol.T).tolist(),
    }
    c3 = config.pde.c3_tilde if config.rho0.c3_tilde is None else config.rho0.c3_tilde
    if c3 is not None:
        decay = check_decay_bounds(sol, horizon=decay_horizon(c3), method=config.grid.shift)
        _print_reports([decay])
        payload["decay_bounds"] = decay.model_dump()
    fieldio.write_summary(directory, "solve_pde", payload)
    click.echo(f"[OK] {len(sol.times)} snapshot(s) -> {directory / 'pde'}")


@main.command("simulate")
@_config_options
@click.option("-N", "--particles", "N", type=click.IntRange(min=1), default=None)
@click.option("--run-index", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--save-table/--no-save-table", default=False, show_default=True)
@click.option(
    "--table",
    "table_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Reuse a table saved by an earlier --save-table run instead of building it.",
)
@_handled
def simulate_cmd(config_path, seed, out, workers, N, run_index, save_table, table_path) -> None:
    """Step one particle system to T (or its stopping time) and checkpoint it."""
    config, directory = _resolve(config_path, seed, out, workers)
    N = config.particles.N if N is None else N
    spec = harness.mollifier_for(config, N)
    ensemble = sample_initial(N, harness.initial_density(config), config.noise.seed, run_index)
    try:
        check_inside(ensemble.positions, config.grid.L, "initial particle")
    except VortexLabError as e:
        raise ConfigError(f"initial density reaches outside the box: {e.detail}") from e
    if table_path is None:
        table = harness.build_table(config, spec)
    else:
        table = _load_table(table_path, config, spec)
    if save_table:
        fieldio.write_table(directory / "table.bin", table)
    noise = NoiseConfig(
        config.noise.seed,
        config.particles.dt,
        SigmaSchedule.from_config(config.noise.sigma),
        run_index,
    )
    times = harness.snapshot_times(config)
    trajectory, exit_record = simulate(
        ensemble,
        table,
        noise,
        config.pde.T,
        spec.exit_radius,
        record_steps={int(round(t / noise.dt)) for t in times},
        method=config.particles.drift,
        workers=config.workers,
    )
    fieldio.write_trajectory(directory / "trajectory.bin", trajectory)
    fieldio.write_summary(
        directory,
        "simulate",
        {
            "N": N,
            "run_index": run_index,
            "seed": config.noise.seed,
            "tau": exit_record.tau,
            "exited": exit_record.exited,
            "radius": exit_record.radius,
            "frames": trajectory.frames,
            "steps": trajectory.steps,
            "final_shift": trajectory.shifts[-1].tolist(),
        },
    )
    state = "stopped" if exit_record.exited else "reached T"
    click.echo(f"[OK] N={N} {state} at t={exit_record.tau:.4f}")


@main.command()
@_config_options
@click.option("-N", "--particles", "N", type=click.IntRange(min=1), default=None)
@click.option("--run-index", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--kr/--no-kr", "with_kr", default=True, show_default=True)
@_handled
def entropy(config_path, seed, out, workers, N, run_index, with_kr) -> None:
    """One paired run: the EntropyTrace of particles against the limit."""
    config, directory = _resolve(config_path, seed, out, workers)
    run = harness.paired_run(config, N, run_index, with_kr=with_kr)
    fieldio.write_trace_csv(directory / fieldio.TRACE_CSV, run.trace)
    fieldio.write_summary(
        directory,
        "entropy",
        {
            "N": run.N,
            "run_index": run.run_index,
            "seed": run.seed,
            "sup_H": run.sup_H,
            "initial_entropy": run.initial_entropy,
            "tau": run.tau,
            "exited": run.exited,
            "failures": run.failures,
        },
    )
    for failure in run.failures:
        click.echo(f"[WARN] {failure}")
    click.echo(f"[OK] N={run.N} sup H={run.sup_H:.6g} over {len(run.trace.times)} snapshot(s)")


@main.command("rate-sweep")
@_config_options
@click.option("--seeds", type=click.IntRange(min=1), default=None)
@click.option("--kr/--no-kr", "with_kr", default=True, show_default=True)
@_handled
def rate_sweep_cmd(config_path, seed, out, workers, seeds, with_kr) -> None:
    """Paired runs over the sweep's Ns and seeds; RateReport CSV and summary."""
    config, directory = _resolve(config_path, seed, out, workers)
    report = harness.rate_sweep(config, seeds=seeds, with_kr=with_kr)
    fieldio.write_rate_report(directory, report)
    for failure in report.failures:
        click.echo(f"[WARN] {failure}")
    slope = "n/a" if report.slope is None else f"{report.slope:.4f}"
    click.echo(
        f"[{'OK' if report.decreasing else 'WARN'}] median sup H over N: "
        + ", ".join(f"{h:.4g}" for h in report.sup_H)
    )
    click.echo(f"[OK] slope={slope} theta={report.targets.theta:.4f} -> {directory}")


@main.command("kernels-selftest")
@_config_options
@click.option("-N", "--particles", "N", type=click.IntRange(min=1), default=None)
@click.option("--samples", type=click.IntRange(min=1000), default=100_000, show_default=True)
@click.option("--far-points", type=click.IntRange(min=1), default=16, show_default=True)
@_handled
def kernels_selftest(config_path, seed, out, workers, N, samples, far_points) -> None:
    """Kernel, mollifier and interaction-table identities."""
    config, directory = _resolve(config_path, seed, out, workers)
    N = config.particles.N if N is None else N
    spec = harness.mollifier_for(config, N)
    L, M = harness.table_geometry(config, spec)
    reports = selftest(
        spec,
        L,
        M,
        samples=samples,
        far_points=far_points,
        seed=config.noise.seed,
        workers=config.workers,
    )
    _print_reports(reports)
    passed = all(r.passed for r in reports)
    fieldio.write_summary(
        directory,
        "kernels_selftest",
        {"passed": passed, "N": N, "L": L, "M": M, "reports": [r.model_dump() for r in reports]},
    )
    if not passed:
        raise SystemExit(AssumptionViolation.exit_code)


@main.command()
@click.option("--results", type=click.Path(path_type=Path), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(results, host, port) -> None:
    """Serve the read-only results API over uvicorn."""
    import uvicorn

    from vortexlab.api import create_app

    uvicorn.run(create_app(results), host=host, port=port)

