"""Paired particle / limit runs on one common-noise path, N sweeps and rate fits.

A paired run draws the initial sample, the individual noises and the common
increments from the streams of (master seed, run index), steps the particles
and compares rho^N_t with rho(t) = rho~(t, . - X_t) at every snapshot until the
stopping time fires. Particles are stored relative to X_t and every metric is
translation invariant, so the comparison runs in the co-moving frame and the
common noise cancels exactly.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from vortexlab.densities import GaussianMixture
from vortexlab.errors import (
    AssumptionViolation,
    ConfigError,
    InsufficientSeedsError,
    VortexLabError,
)
from vortexlab.fields import check_inside, mollified_density, shift_field
from vortexlab.infometrics import (
    EntropyTrace,
    FloorPolicy,
    KRBracket,
    fisher_information,
    kr_distance,
    kr_trend_check,
    l1_distance,
    qv_series,
    relative_entropy,
    trace_violations,
)
from vortexlab.kernels import K0_BOUND, KernelTable, build_interaction_table, k0_bound_report
from vortexlab.models import (
    AssumptionReport,
    ExperimentConfig,
    ParticleSection,
    ValidationSummary,
)
from vortexlab.mollifier import (
    MollifierSpec,
    admissibility_violations,
    check_assumption_AV,
    gradient_l1_norm,
    tail_radius,
)
from vortexlab.particles import (
    NoiseConfig,
    SigmaSchedule,
    Trajectory,
    drift_all,
    sample_initial,
    simulate,
)
from vortexlab.pde import (
    LimitSolution,
    boundary_mass,
    check_boundary_mass,
    decay_horizon,
    solve_vorticity,
)

logger = logging.getLogger(__name__)

MIN_SEEDS = 4
# trivially valid bracket for runs that skip the KR estimate
UNMEASURED_KR = KRBracket(0.0, 2.0)
MESH_TOLERANCE = 1e-3


# --------------------
# Rate targets
# --------------------
@dataclass(frozen=True, slots=True)
class RateTargets:
    beta: float
    alpha: float
    d: int
    delta: float
    theta1: float
    theta2: float
    theta: float
    theta_derivation: float  # min(theta2, theta1 - delta)

    def as_dict(self) -> dict[str, float]:
        return {
            "beta": self.beta,
            "alpha": self.alpha,
            "delta": self.delta,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "theta": self.theta,
            "theta_derivation": self.theta_derivation,
        }


def rate_targets(beta: float, alpha: float, d: int = 2, delta: float = 0.01) -> RateTargets:
    """theta1 = 1/2 - beta(1+1/d), theta2 = 1 - beta(1+2/d+2alpha), theta = min - delta."""
    problems = admissibility_violations(beta, alpha, d)
    if problems:
        raise AssumptionViolation("; ".join(problems))
    if delta <= 0.0:
        raise AssumptionViolation(f"delta must be positive, got {delta}")
    theta1 = 0.5 - beta * (1.0 + 1.0 / d)
    theta2 = 1.0 - beta * (1.0 + 2.0 / d + 2.0 * alpha)
    theta = min(theta2, theta1) - delta
    if theta <= 0.0:
        raise AssumptionViolation(f"rate exponent theta={theta:.4f} is not positive")
    return RateTargets(beta, alpha, d, delta, theta1, theta2, theta, min(theta2, theta1 - delta))


# --------------------
# Config to runtime objects
# --------------------
def mollifier_for(config: ExperimentConfig, N: int) -> MollifierSpec:
    return MollifierSpec(config.mollifier.beta, config.mollifier.alpha, N)


def table_geometry(config: ExperimentConfig, spec: MollifierSpec) -> tuple[float, int]:
    """Half-width and the smallest power-of-two M meeting the cell rule.

    The half-width is margin N^beta, widened when needed so that V^N leaves
    at most the tail tolerance outside the box.
    """
    L = max(
        config.table.margin * spec.exit_radius,
        1.01 * tail_radius(spec, config.table.tail_tolerance),
    )
    cells = 2.0 * L * config.grid.cells_per_bandwidth / spec.bandwidth
    M = max(config.table.min_points, 8)
    while M < cells:
        M *= 2
    return L, M


def build_table(config: ExperimentConfig, spec: MollifierSpec) -> KernelTable:
    L, M = table_geometry(config, spec)
    return build_interaction_table(spec, L, M, config.table.tail_tolerance, workers=config.workers)


def initial_density(config: ExperimentConfig) -> GaussianMixture:
    return GaussianMixture.from_config(config.rho0)


def snapshot_times(config: ExperimentConfig) -> np.ndarray:
    """Uniform times in [0, T] rounded to multiples of the particle step."""
    dt = config.particles.dt
    raw = np.linspace(0.0, config.pde.T, config.sweep.snapshots)
    steps = np.unique(np.rint(raw / dt).astype(int))
    return steps * dt


def solve_limit(config: ExperimentConfig, times: np.ndarray | None = None) -> LimitSolution:
    """Deterministic limit solution, boundary mass checked at every snapshot."""
    rho0 = initial_density(config).on_grid(config.grid.L, config.grid.M)
    sol = solve_vorticity(
        rho0,
        config.pde.T,
        config.pde.dt,
        snapshot_times(config) if times is None else times,
        cfl=config.pde.cfl,
        negative_floor=config.pde.negative_floor,
        workers=config.workers,
    )
    for t, snap in zip(sol.times, sol.snapshots, strict=True):
        check_boundary_mass(snap, config.pde.boundary_tolerance, t=float(t))
    return sol


@lru_cache(maxsize=8)
def _solve_cached(config_json: str) -> LimitSolution:
    return solve_limit(ExperimentConfig.model_validate_json(config_json))


def cached_limit(config: ExperimentConfig) -> LimitSolution:
    """Limit solution shared by every N and seed of one experiment; the last 8 are kept."""
    # only the particle step enters the limit solve (through the snapshot times)
    shared = config.model_copy(update={"particles": ParticleSection(dt=config.particles.dt)})
    return _solve_cached(shared.model_dump_json(exclude={"output", "noise"}))


# --------------------
# Paired run
# --------------------
@dataclass(slots=True)
class PairedRun:
    N: int
    run_index: int
    seed: int
    trace: EntropyTrace
    tau: float
    exited: bool
    initial_entropy: float
    failures: list[str] = field(default_factory=list)

    @property
    def sup_H(self) -> float:
        return self.trace.sup_H


def paired_run(
    config: ExperimentConfig,
    N: int | None = None,
    run_index: int = 0,
    limit: LimitSolution | None = None,
    sigma: SigmaSchedule | None = None,
    with_kr: bool = True,
) -> PairedRun:
    N = config.particles.N if N is None else N
    seed = config.noise.seed
    spec = mollifier_for(config, N)
    rate_targets(spec.beta, spec.alpha, spec.d, config.mollifier.delta)
    limit = cached_limit(config) if limit is None else limit
    L, M = config.grid.L, config.grid.M
    policy = FloorPolicy.from_config(config.infometrics)
    sigma = SigmaSchedule.from_config(config.noise.sigma) if sigma is None else sigma

    ensemble = sample_initial(N, initial_density(config), seed, run_index)
    try:
        check_inside(ensemble.positions, L, "initial particle")
    except VortexLabError as e:
        raise ConfigError(f"initial density reaches outside the box: {e.detail}") from e
    table = build_table(config, spec)
    noise = NoiseConfig(seed, config.particles.dt, sigma, run_index)
    snap_steps = {int(round(t / noise.dt)) for t in limit.times}
    trajectory, exit_record = simulate(
        ensemble,
        table,
        noise,
        limit.T,
        spec.exit_radius,
        record_steps=snap_steps,
        method=config.particles.drift,
        workers=config.workers,
    )
    # H, I, l1, KR and qv are translation invariant, so rho^N_t against
    # rho~(t, . - X_t) is evaluated as the co-moving density against rho~(t)
    frames = [
        k
        for k in range(trajectory.frames)
        if int(round(trajectory.times[k] / noise.dt)) in snap_steps
    ]
    snapshots = Trajectory(
        trajectory.times[frames],
        trajectory.relative[frames],
        trajectory.shifts[frames],
        trajectory.dt,
        trajectory.steps,
    )
    densities = [
        mollified_density(snapshots.relative[k], spec, L, M, config.workers)
        for k in range(snapshots.frames)
    ]
    _, qv_cum = qv_series(snapshots, spec, L, M, exit_record, densities, config.workers)

    trace = EntropyTrace()
    for k, rhoN in enumerate(densities):
        t = round(float(snapshots.times[k]) / noise.dt) * noise.dt
        rho = limit.at(t)
        H = relative_entropy(rhoN, rho, policy)
        I = fisher_information(rhoN, rho, policy, config.grid.gradient)  # noqa: E741
        l1 = l1_distance(rhoN, rho)
        if with_kr:
            kr = kr_distance(
                snapshots.relative[k],
                rho,
                samples=config.infometrics.kr_samples,
                repeats=config.infometrics.kr_repeats,
                seed=seed,
            )
        else:
            kr = UNMEASURED_KR
        trace.append(t, H, I, l1, kr, float(qv_cum[k]))
    initial_H = trace.H[0] if len(trace) else math.nan

    failures = [
        f"N={N} run={run_index} seed={seed}: {problem}" for problem in trace_violations(trace)
    ]
    for failure in failures:
        logger.warning("invariant failure: %s", failure)
    return PairedRun(
        N, run_index, seed, trace, exit_record.tau, exit_record.exited, initial_H, failures
    )


# --------------------
# Sweep
# --------------------
@dataclass(frozen=True, slots=True)
class _Task:
    config_json: str
    N: int
    run_index: int
    with_kr: bool


def _run_task(task: _Task) -> PairedRun:
    config = ExperimentConfig.model_validate_json(task.config_json)
    return paired_run(config, task.N, task.run_index, with_kr=task.with_kr)


@dataclass(slots=True)
class RateReport:
    Ns: list[int]
    sup_H: list[float]  # median over seeds
    sup_H_floored: list[float]
    slope: float | None
    slope_ci: tuple[float | None, float | None]
    targets: RateTargets
    exit_fractions: list[float]
    exit_bounds: list[float]
    h_floor: float
    initial_entropy: list[float]
    qv: list[float]  # median cumulative quadratic variation at the last snapshot
    qv_slope: float | None
    seeds: int
    failures: list[str] = field(default_factory=list)
    kr_trend: AssumptionReport | None = None

    CSV_COLUMNS = (
        "N",
        "sup_H",
        "sup_H_floored",
        "exit_fraction",
        "exit_bound",
        "initial_H",
        "qv",
    )

    def rows(self) -> list[tuple]:
        return list(
            zip(
                self.Ns,
                self.sup_H,
                self.sup_H_floored,
                self.exit_fractions,
                self.exit_bounds,
                self.initial_entropy,
                self.qv,
                strict=True,
            )
        )

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.sup_H, self.sup_H[1:], strict=False))

    @property
    def exits_nonincreasing(self) -> bool:
        return all(
            b <= a for a, b in zip(self.exit_fractions, self.exit_fractions[1:], strict=False)
        )

    @property
    def slope_negative(self) -> bool:
        return self.slope_ci[1] is not None and self.slope_ci[1] < 0.0

    def summary(self) -> dict:
        return {
            "Ns": self.Ns,
            "sup_H": self.sup_H,
            "sup_H_floored": self.sup_H_floored,
            "exit_fractions": self.exit_fractions,
            "slope": self.slope,
            "slope_ci": list(self.slope_ci),
            "targets": self.targets.as_dict(),
            "h_floor": self.h_floor,
            "metadata": {
                "seeds": self.seeds,
                "exit_bounds": self.exit_bounds,
                "initial_entropy": self.initial_entropy,
                "qv": self.qv,
                "qv_slope": self.qv_slope,
                "sup_H_decreasing": self.decreasing,
                "exit_fractions_nonincreasing": self.exits_nonincreasing,
                "slope_negative_95": self.slope_negative,
                "invariant_failures": len(self.failures),
                "kr_trend": None if self.kr_trend is None else self.kr_trend.model_dump(),
            },
        }


def entropy_floor(sol: LimitSolution, policy: FloorPolicy | None = None) -> float:
    """H(rho_T | rho_T resampled through a fractional-cell shift and back).

    Measures the entropy the grid and the resampling add on their own.
    """
    rho = sol.snapshots[-1]
    a = np.array([0.37, 0.61]) * rho.h
    there = shift_field(rho, a, method="bilinear")
    back = shift_field(there, -a, method="bilinear")
    return max(relative_entropy(rho, back, policy or FloorPolicy()), 0.0)


def fit_loglog(Ns, values) -> tuple[float | None, tuple[float | None, float | None]]:
    """Least-squares slope of log(values) on log(N) with a t-based 95% interval."""
    x = np.log(np.asarray(Ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    keep = np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2:
        return None, (None, None)
    fit = stats.linregress(x, y)
    if x.size < 3:
        return float(fit.slope), (None, None)
    half = float(stats.t.ppf(0.975, x.size - 2) * fit.stderr)
    return float(fit.slope), (float(fit.slope - half), float(fit.slope + half))


def rate_sweep(
    config: ExperimentConfig,
    Ns: list[int] | None = None,
    seeds: int | None = None,
    workers: int | None = None,
    with_kr: bool = True,
) -> RateReport:
    """Median sup-entropy per N over seeds, floor-subtracted log-log slope, exit statistics.

    Runs execute in a process pool; results come back in (N, run index)
    order, so aggregation does not depend on scheduling.
    """
    Ns = list(config.sweep.Ns if Ns is None else Ns)
    seeds = config.sweep.seeds if seeds is None else seeds
    workers = config.workers if workers is None else workers
    if seeds < MIN_SEEDS:
        raise InsufficientSeedsError(f"rate sweep needs at least {MIN_SEEDS} seeds, got {seeds}")
    if any(b <= a for a, b in zip(Ns, Ns[1:], strict=False)):
        raise ConfigError("sweep Ns must be strictly increasing")
    targets = rate_targets(
        config.mollifier.beta, config.mollifier.alpha, 2, config.mollifier.delta
    )
    summary = validate_experiment(config, Ns)
    if not summary.passed:
        failed = [v for r in summary.reports if not r.passed for v in r.violations]
        raise ConfigError("experiment fails validation: " + "; ".join(failed))

    limit = cached_limit(config)
    inner = config.model_copy(update={"workers": 1}) if workers > 1 else config
    payload = inner.model_dump_json()
    tasks = [_Task(payload, n, r, with_kr) for n in Ns for r in range(seeds)]
    logger.info("rate sweep: %d runs over Ns=%s with %d worker(s)", len(tasks), Ns, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_task, tasks))
    else:
        runs = [paired_run(config, t.N, t.run_index, limit=limit, with_kr=with_kr) for t in tasks]

    by_n: dict[int, list[PairedRun]] = {n: [] for n in Ns}
    for run in runs:
        by_n[run.N].append(run)

    h_floor = entropy_floor(limit, FloorPolicy.from_config(config.infometrics))
    rho0 = initial_density(config)
    sigma_norm = SigmaSchedule.from_config(config.noise.sigma).sup_norm
    sup_H = [float(np.median([r.sup_H for r in by_n[n]])) for n in Ns]
    floored = [max(h - h_floor, 0.0) for h in sup_H]
    fit_values = [h if h > 0.0 else math.nan for h in floored]
    slope, ci = fit_loglog(Ns, fit_values)
    qv = [float(np.median([r.trace.qv[-1] for r in by_n[n]])) for n in Ns]
    qv_slope, _ = fit_loglog(Ns, [q if q > 0.0 else math.nan for q in qv])

    report = RateReport(
        Ns=Ns,
        sup_H=sup_H,
        sup_H_floored=floored,
        slope=slope,
        slope_ci=ci,
        targets=targets,
        exit_fractions=[float(np.mean([r.exited for r in by_n[n]])) for n in Ns],
        exit_bounds=[
            exit_probability_bound(
                n, config.mollifier.beta, rho0, sigma_norm, config.pde.T, config.mollifier.alpha
            )
            for n in Ns
        ],
        h_floor=h_floor,
        initial_entropy=[float(np.median([r.initial_entropy for r in by_n[n]])) for n in Ns],
        qv=qv,
        qv_slope=qv_slope,
        seeds=seeds,
        failures=[f for run in runs for f in run.failures],
        kr_trend=kr_trend_check(
            {n: [r.trace for r in by_n[n]] for n in Ns}, config.mollifier.beta
        )
        if with_kr
        else None,
    )
    logger.info(
        "rate sweep done: slope=%s ci=%s theta=%.4f",
        "n/a" if slope is None else f"{slope:.4f}",
        ci,
        targets.theta,
    )
    return report


# --------------------
# Horizons and exit bounds
# --------------------
def admissible_horizon(c3_tilde: float) -> float:
    """min(T1, 1 / (||grad V||_1 ||K0||_inf))."""
    return min(decay_horizon(c3_tilde), 1.0 / (gradient_l1_norm() * K0_BOUND))


def interaction_speed_bound(spec: MollifierSpec) -> float:
    """sup |K * V^N| <= sqrt(2 ||V^N||_inf ||V^N||_1 / pi)."""
    peak = spec.amplitude * spec.normalization * math.exp(-1.0)
    return math.sqrt(2.0 * peak / math.pi)


def exit_probability_bound(
    N: int, beta: float, rho0: GaussianMixture, sigma_norm: float, T: float, alpha: float = 1.1
) -> float:
    """Union bound on P(tau^N < T).

    The radius N^beta minus the largest drift displacement is split evenly
    between the initial position and the noise. Each coordinate of
    sqrt(2) W + int sigma dB is Gaussian with variance at most (2 + |sigma|^2) T,
    so the reflection principle bounds its running maximum.
    """
    spec = MollifierSpec(beta, alpha, N)
    room = spec.exit_radius - interaction_speed_bound(spec) * T
    if room <= 0.0:
        return 1.0
    half = 0.5 * room
    spread = math.sqrt((2.0 + sigma_norm**2) * T)
    initial = rho0.tail_probability(half)
    moving = 4.0 * float(stats.norm.sf(half / (math.sqrt(2.0) * spread)))
    return min(1.0, N * (initial + moving))


# --------------------
# Validation
# --------------------
def _grid_report(config: ExperimentConfig, Ns: list[int]) -> AssumptionReport:
    violations: list[str] = []
    warnings: list[str] = []
    constants: dict[str, float] = {}
    L, M = config.grid.L, config.grid.M
    h = 2.0 * L / M
    if M < 8 or M & (M - 1):
        violations.append(f"grid rule: M={M} must be a power of two >= 8")
    for n in Ns:
        try:
            spec = mollifier_for(config, n)
        except AssumptionViolation:
            continue  # reported by the admissibility check
        cells = spec.bandwidth / h
        constants[f"cells_per_bandwidth_N{n}"] = cells
        if cells < config.grid.cells_per_bandwidth:
            violations.append(
                f"grid rule: N={n} has {cells:.2f} cells per bandwidth "
                f"< {config.grid.cells_per_bandwidth}"
            )
        if spec.exit_radius >= L:
            violations.append(
                f"exit radius N^beta={spec.exit_radius:.3f} for N={n} reaches L={L}"
            )
        try:
            build_table(config, spec)
        except VortexLabError as e:
            violations.append(f"interaction table for N={n}: {e.detail}")
    if config.pde.dt > config.pde.T:
        warnings.append("pde.dt exceeds the horizon T")
    return AssumptionReport(
        name="grid_rules",
        passed=not violations,
        constants=constants,
        violations=violations,
        warnings=warnings,
    )


def _initial_data_report(config: ExperimentConfig) -> AssumptionReport:
    violations: list[str] = []
    constants: dict[str, float] = {}
    try:
        rho0 = initial_density(config)
    except VortexLabError as e:
        return AssumptionReport(name="initial_data", passed=False, violations=[e.detail])
    constants["mass"] = rho0.mass
    if config.rho0.kind != "decay_profile" and abs(rho0.mass - 1.0) > 1e-12:
        violations.append(f"initial density mass {rho0.mass} is not one")
    grid = rho0.on_grid(config.grid.L, config.grid.M)
    edge = boundary_mass(grid)
    constants["boundary_mass"] = edge
    if edge > config.pde.boundary_tolerance:
        violations.append(
            f"initial density leaves mass {edge:.3e} near the box boundary "
            f"(tolerance {config.pde.boundary_tolerance:.1e})"
        )
    return AssumptionReport(
        name="initial_data", passed=not violations, constants=constants, violations=violations
    )


def _horizon_report(config: ExperimentConfig) -> AssumptionReport:
    c3 = config.pde.c3_tilde
    if c3 is None:
        return AssumptionReport(
            name="horizon", passed=True, warnings=["pde.c3_tilde unset; horizon not checked"]
        )
    try:
        horizon = admissible_horizon(c3)
    except AssumptionViolation as e:
        return AssumptionReport(name="horizon", passed=False, violations=[e.detail])
    warnings = []
    if config.pde.T > horizon:
        warnings.append(f"T={config.pde.T} exceeds the admissible horizon {horizon:.4g}")
    return AssumptionReport(
        name="horizon",
        passed=True,
        constants={"T1": decay_horizon(c3), "admissible_horizon": horizon},
        warnings=warnings,
    )


def mesh_drift_report(
    config: ExperimentConfig, N: int, tolerance: float = MESH_TOLERANCE
) -> AssumptionReport:
    """Particle-mesh drift against the direct sum on the initial sample of run 0.

    A departure above ``tolerance`` is a warning: the mesh error shrinks with
    ``grid.cells_per_bandwidth``, not with N.
    """
    try:
        spec = mollifier_for(config, N)
        ensemble = sample_initial(N, initial_density(config), config.noise.seed, 0)
        table = build_table(config, spec)
        direct = drift_all(ensemble, table, "direct", workers=config.workers)
        mesh = drift_all(ensemble, table, "mesh")
    except VortexLabError as e:
        return AssumptionReport(name="mesh_drift", passed=False, violations=[e.detail])
    scale = float(np.abs(direct).max())
    error = float(np.abs(mesh - direct).max()) / scale if scale > 0.0 else 0.0
    warnings = []
    if error > tolerance:
        warnings.append(
            f"mesh drift departs from the direct sum by {error:.3e} > {tolerance:.0e} "
            f"at N={N}; raise grid.cells_per_bandwidth"
        )
    return AssumptionReport(
        name="mesh_drift",
        passed=True,
        constants={"relative_error": error, "tolerance": tolerance},
        warnings=warnings,
    )


def validate_experiment(
    config: ExperimentConfig, Ns: list[int] | None = None, k0_samples: int = 100_000
) -> ValidationSummary:
    """Run every assumption check on a config; never raises for a failed check."""
    Ns = list(config.sweep.Ns if Ns is None else Ns) or [config.particles.N]
    if config.particles.N not in Ns:
        Ns = sorted({*Ns, config.particles.N})
    reports: list[AssumptionReport] = []

    try:
        targets = rate_targets(
            config.mollifier.beta, config.mollifier.alpha, 2, config.mollifier.delta
        )
        reports.append(
            AssumptionReport(name="beta_admissibility", passed=True, constants=targets.as_dict())
        )
    except AssumptionViolation as e:
        reports.append(
            AssumptionReport(name="beta_admissibility", passed=False, violations=[e.detail])
        )

    try:
        reports.append(check_assumption_AV(mollifier_for(config, Ns[0])))
    except AssumptionViolation as e:
        reports.append(AssumptionReport(name="A^V", passed=False, violations=[e.detail]))

    k0 = k0_bound_report(samples=k0_samples)
    reports.append(
        AssumptionReport(
            name="K0_bound",
            passed=k0["max_entry"] <= k0["bound"],
            constants=k0,
            violations=[]
            if k0["max_entry"] <= k0["bound"]
            else [f"K0 entry {k0['max_entry']} exceeds {k0['bound']}"],
        )
    )

    sigma = SigmaSchedule.from_config(config.noise.sigma)
    reports.append(
        AssumptionReport(
            name="sigma_bounded",
            passed=math.isfinite(sigma.sup_norm),
            constants={"sup_norm": sigma.sup_norm},
        )
    )
    reports.append(_grid_report(config, Ns))
    reports.append(_initial_data_report(config))
    reports.append(_horizon_report(config))
    if config.particles.drift == "mesh":
        reports.append(mesh_drift_report(config, Ns[0]))
    for report in reports:
        level = logging.INFO if report.passed else logging.WARNING
        logger.log(level, "check %s: %s", report.name, "pass" if report.passed else "FAIL")
    return ValidationSummary(passed=all(r.passed for r in reports), reports=reports)


def initial_entropy(config: ExperimentConfig, N: int, run_index: int = 0) -> float:
    """H(rho^N_0 | rho_0) for the initial sample of one run."""
    spec = mollifier_for(config, N)
    ensemble = sample_initial(N, initial_density(config), config.noise.seed, run_index)
    rho0 = initial_density(config).on_grid(config.grid.L, config.grid.M)
    rhoN = mollified_density(ensemble, spec, config.grid.L, config.grid.M, config.workers)
    return relative_entropy(rhoN, rho0, FloorPolicy.from_config(config.infometrics))
