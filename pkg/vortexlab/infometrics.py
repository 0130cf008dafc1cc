"""Entropy-type functionals between grid densities, KR brackets and the quadratic variation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.special import logsumexp
from scipy.stats import linregress

from vortexlab.errors import (
    ConfigError,
    IntegrabilityError,
    SampleSizeError,
    StoppedRunError,
    SupportMismatchError,
)
from vortexlab.fields import (
    GradientMethod,
    GridField,
    gradient,
    mollified_density,
    mollifier_score_density,
)
from vortexlab.models import AssumptionReport, InfoSection
from vortexlab.mollifier import MollifierSpec
from vortexlab.particles import ExitRecord, Trajectory

logger = logging.getLogger(__name__)

MAX_KR_SAMPLES = 2048
MAX_EXPONENT = 700.0


@dataclass(frozen=True, slots=True)
class FloorPolicy:
    """Where f and g are too small to resolve on the grid.

    f below ``f_rel`` times its peak is dropped. g below the resolution floor
    max(``g_abs``, ``g_rel`` peak g) is unresolved: the entropy reads it as the
    floor, which makes H a lower bound, and the Fisher information skips it.
    Once f holds more than ``support_tolerance`` mass on unresolved nodes the
    pair is a support mismatch.
    """

    f_rel: float = 1e-14
    g_abs: float = 1e-30
    g_rel: float = 1e-14
    support_tolerance: float = 0.25

    @classmethod
    def from_config(cls, section: InfoSection) -> FloorPolicy:
        return cls(
            section.f_rel_floor,
            section.g_abs_floor,
            section.g_rel_floor,
            section.support_tolerance,
        )


DEFAULT_POLICY = FloorPolicy()


def _check_pair(f: GridField, g: GridField) -> None:
    if not f.same_grid(g):
        raise ConfigError(f"grid mismatch: (L={f.L}, M={f.M}) vs (L={g.L}, M={g.M})")
    if f.components != 1 or g.components != 1:
        raise ConfigError("information functionals take scalar densities")


def _window(
    f: GridField, g: GridField, policy: FloorPolicy
) -> tuple[np.ndarray, np.ndarray, float]:
    """Kept nodes of f, the unresolved subset where g is below its floor, and the floor."""
    _check_pair(f, g)
    fv, gv = f.values, g.values
    kept = fv >= policy.f_rel * fv.max()
    g_floor = max(policy.g_abs, policy.g_rel * gv.max())
    unresolved = kept & (gv < g_floor)
    lost = float(fv[unresolved].sum() * f.h**2)
    if lost > policy.support_tolerance:
        raise SupportMismatchError(
            f"f holds mass {lost:.3e} where g < {g_floor:.3e} "
            f"(tolerance {policy.support_tolerance:.1e})"
        )
    return kept, unresolved, g_floor


def relative_entropy(f: GridField, g: GridField, policy: FloorPolicy = DEFAULT_POLICY) -> float:
    """H(f|g) = integral of f ln(f/g), g read as max(g, floor)."""
    kept, _, g_floor = _window(f, g, policy)
    fv = f.values[kept]
    gv = np.maximum(g.values[kept], g_floor)
    return float(np.sum(fv * (np.log(fv) - np.log(gv))) * f.h**2)


def fisher_information(
    f: GridField,
    g: GridField,
    policy: FloorPolicy = DEFAULT_POLICY,
    method: GradientMethod = "spectral",
) -> float:
    """I(f|g) = integral of f |grad ln(f/g)|^2 over the nodes where g is resolved."""
    kept, unresolved, _ = _window(f, g, policy)
    w = kept & ~unresolved
    grad_f = gradient(f, method).values[w]
    grad_g = gradient(g, method).values[w]
    fv, gv = f.values[w], g.values[w]
    diff = grad_f / fv[:, None] - grad_g / gv[:, None]
    return float(np.sum(fv * np.sum(diff * diff, axis=1)) * f.h**2)


def l1_distance(f: GridField, g: GridField) -> float:
    _check_pair(f, g)
    return float(np.abs(f.values - g.values).sum() * f.h**2)


# --------------------
# Kantorovich-Rubinstein bracket
# --------------------
@dataclass(frozen=True, slots=True)
class KRBracket:
    lower: float
    upper: float


Measure = GridField | np.ndarray


def _as_measure(m: Measure) -> Measure:
    if isinstance(m, GridField):
        if m.components != 1:
            raise ConfigError("KR distance takes scalar densities")
        return m
    points = np.asarray(getattr(m, "positions", m), dtype=float).reshape(-1, 2)
    if points.shape[0] == 0:
        raise ConfigError("empty particle set")
    return points


def _integrate(m: Measure, phi) -> float:
    if isinstance(m, GridField):
        return float(np.sum(phi(m.points()) * m.values) * m.h**2)
    return float(np.mean(phi(m)))


def _mean(m: Measure) -> np.ndarray:
    if isinstance(m, GridField):
        w = m.values * m.h**2
        return np.einsum("ij,ijk->k", w, m.points()) / w.sum()
    return m.mean(axis=0)


def _test_functions(f: Measure, g: Measure, directions: int, seed: int):
    """Functions with sup norm <= 1 and Lipschitz constant <= 1."""
    mf, mg = _mean(f), _mean(g)
    center = 0.5 * (mf + mg)
    units = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    gap = mg - mf
    if np.linalg.norm(gap) > 0.0:
        units.append(gap / np.linalg.norm(gap))
    angles = np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi, directions)
    units.extend(np.stack([np.cos(angles), np.sin(angles)], axis=1))

    funcs = []
    for c in (center, np.zeros(2)):
        for e in units:
            funcs.append(lambda x, c=c, e=e: np.clip((x - c) @ e, -1.0, 1.0))
            funcs.append(lambda x, c=c, e=e: np.sin((x - c) @ e))
    for c in (mf, mg, center):
        for r in (1.0, 2.0):
            funcs.append(
                lambda x, c=c, r=r: np.maximum(0.0, 1.0 - np.linalg.norm(x - c, axis=-1) / r)
            )
    return funcs


def _draw(m: Measure, u: np.ndarray, jitter: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw driven by the given uniforms (common random numbers)."""
    if isinstance(m, GridField):
        weights = np.maximum(m.values, 0.0).ravel()
        cdf = np.cumsum(weights)
        idx = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), cdf.size - 1)
        nodes = m.points().reshape(-1, 2)[idx]
        return nodes + (jitter - 0.5) * m.h
    idx = np.minimum((u * m.shape[0]).astype(np.intp), m.shape[0] - 1)
    return m[idx]


def wasserstein1(a: np.ndarray, b: np.ndarray) -> float:
    """Exact W1 between equal-size uniform point clouds by linear assignment."""
    cost = cdist(a, b)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def kr_distance(
    f: Measure,
    g: Measure,
    samples: int = MAX_KR_SAMPLES,
    repeats: int = 2,
    seed: int = 0,
    directions: int = 16,
) -> KRBracket:
    """Bracket [lower, upper] around the bounded-Lipschitz distance of f and g.

    ``lower`` maximizes over a fixed dictionary of test functions; ``upper`` is
    min(2, W1) between samples of both measures drawn from shared uniforms.
    """
    if not 1 <= samples <= MAX_KR_SAMPLES:
        raise SampleSizeError(f"KR samples must lie in [1, {MAX_KR_SAMPLES}], got {samples}")
    if repeats < 1:
        raise SampleSizeError(f"KR repeats must be >= 1, got {repeats}")
    f, g = _as_measure(f), _as_measure(g)
    lower = 0.0
    for phi in _test_functions(f, g, directions, seed):
        lower = max(lower, abs(_integrate(f, phi) - _integrate(g, phi)))

    rng = np.random.default_rng(seed)
    distances = []
    for _ in range(repeats):
        u = rng.random(samples)
        jitter = rng.random((samples, 2))
        distances.append(wasserstein1(_draw(f, u, jitter), _draw(g, u, jitter)))
    upper = min(2.0, float(np.mean(distances)))
    lower = min(lower, 2.0)
    if upper < lower:
        # sampling noise; the dictionary value is a certified lower bound
        logger.debug("KR sample estimate %.4g below dictionary bound %.4g", upper, lower)
        upper = lower
    return KRBracket(lower, upper)


# --------------------
# Donsker-Varadhan
# --------------------
def dv_check(
    f: GridField,
    g: GridField,
    phi: GridField,
    eta: float,
    policy: FloorPolicy = DEFAULT_POLICY,
    tolerance: float = 1e-8,
) -> AssumptionReport:
    """Compare integral f Phi with eta H(f|g) + eta ln integral g exp(Phi / eta)."""
    if eta <= 0.0:
        raise ConfigError(f"eta must be positive, got {eta}")
    if not f.same_grid(phi):
        raise ConfigError("Phi must live on the grid of f and g")
    exponent = phi.values / eta
    if not np.all(np.isfinite(exponent)) or exponent.max() > MAX_EXPONENT:
        raise IntegrabilityError(
            f"g exp(Phi/eta) not integrable on the grid (max Phi/eta={exponent.max():.4g})"
        )
    H = relative_entropy(f, g, policy)
    lhs = float(np.sum(f.values * phi.values) * f.h**2)
    weights = np.maximum(g.values, 0.0) * g.h**2
    rhs = eta * H + eta * float(logsumexp(exponent, b=weights))
    holds = lhs <= rhs + tolerance
    return AssumptionReport(
        name="donsker_varadhan",
        passed=holds,
        constants={"lhs": lhs, "rhs": rhs, "entropy": H, "eta": eta},
        violations=[] if holds else [f"LHS {lhs:.10g} exceeds RHS {rhs:.10g}"],
    )


# --------------------
# Quadratic variation
# --------------------
def qv_density(
    positions: np.ndarray,
    spec: MollifierSpec,
    L: float,
    M: int,
    rhoN: GridField | None = None,
    workers: int = 1,
) -> float:
    """(1/2N^2) integral of sum_i |grad V^N(x - X^i)|^2 / rho^N(x) at one time."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    N = positions.shape[0]
    if rhoN is None:
        rhoN = mollified_density(positions, spec, L, M, workers)
    score = mollifier_score_density(positions, spec, L, M, workers)
    positive = rhoN.values > 0.0
    total = np.sum(score.values[positive] / rhoN.values[positive]) * rhoN.h**2
    return float(total / (2.0 * N * N))


def qv_series(
    trajectory: Trajectory,
    spec: MollifierSpec,
    L: float,
    M: int,
    exit_record: ExitRecord | None = None,
    rhoN: list[GridField] | None = None,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame integrand and its cumulative trapezoid in time.

    The integrand is translation invariant, so frames are read in the co-moving
    frame and ``rhoN``, when given, must be built from ``trajectory.relative``.
    """
    if exit_record is not None and exit_record.exited:
        late = trajectory.times > exit_record.tau + 1e-12
        if np.any(late):
            raise StoppedRunError(
                f"frames after the stopping time tau={exit_record.tau:.4f} requested"
            )
    values = np.array(
        [
            qv_density(
                trajectory.relative[k],
                spec,
                L,
                M,
                None if rhoN is None else rhoN[k],
                workers,
            )
            for k in range(trajectory.frames)
        ]
    )
    cumulative = cumulative_trapezoid(values, trajectory.times, initial=0.0)
    return values, cumulative


def qv_term(
    trajectory: Trajectory,
    spec: MollifierSpec,
    L: float,
    M: int,
    exit_record: ExitRecord | None = None,
    rhoN: list[GridField] | None = None,
    workers: int = 1,
) -> float:
    _, cumulative = qv_series(trajectory, spec, L, M, exit_record, rhoN, workers)
    return float(cumulative[-1])


# --------------------
# Traces
# --------------------
@dataclass(slots=True)
class EntropyTrace:
    times: list[float] = field(default_factory=list)
    H: list[float] = field(default_factory=list)
    I: list[float] = field(default_factory=list)  # noqa: E741
    l1: list[float] = field(default_factory=list)
    kr_lo: list[float] = field(default_factory=list)
    kr_hi: list[float] = field(default_factory=list)
    qv: list[float] = field(default_factory=list)  # cumulative

    COLUMNS = ("t", "H", "I", "l1", "kr_lo", "kr_hi", "qv_cum")

    def append(
        self, t: float, H: float, I: float, l1: float, kr: KRBracket, qv: float  # noqa: E741
    ) -> None:
        self.times.append(t)
        self.H.append(H)
        self.I.append(I)
        self.l1.append(l1)
        self.kr_lo.append(kr.lower)
        self.kr_hi.append(kr.upper)
        self.qv.append(qv)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def sup_H(self) -> float:
        return max(self.H) if self.H else 0.0

    def rows(self) -> list[tuple[float, ...]]:
        return list(
            zip(self.times, self.H, self.I, self.l1, self.kr_lo, self.kr_hi, self.qv, strict=True)
        )

    @classmethod
    def from_rows(cls, rows) -> EntropyTrace:
        trace = cls()
        for t, H, I, l1, lo, hi, qv in rows:  # noqa: E741
            trace.append(t, H, I, l1, KRBracket(lo, hi), qv)
        return trace


def trace_violations(trace: EntropyTrace, tolerance: float = 1e-8) -> list[str]:
    """Pointwise invariants of every snapshot: Gibbs, CKP, ranges, bracket order."""
    problems: list[str] = []
    for t, H, I, l1, lo, hi, _ in trace.rows():  # noqa: E741
        if H < -tolerance:
            problems.append(f"t={t:.4f}: H={H:.3e} < 0")
        if I < -tolerance:
            problems.append(f"t={t:.4f}: I={I:.3e} < 0")
        if not -tolerance <= l1 <= 2.0 + tolerance:
            problems.append(f"t={t:.4f}: l1={l1:.6f} outside [0, 2]")
        if l1 * l1 > 2.0 * H + tolerance:
            problems.append(f"t={t:.4f}: CKP fails, l1^2={l1 * l1:.6g} > 2H={2.0 * H:.6g}")
        if lo > hi + tolerance:
            problems.append(f"t={t:.4f}: KR bracket inverted ({lo:.6g} > {hi:.6g})")
        if not (0.0 <= lo <= 2.0 and 0.0 <= hi <= 2.0):
            problems.append(f"t={t:.4f}: KR bracket outside [0, 2]")
    return problems


def kr_trend_check(
    traces: dict[int, list[EntropyTrace]],
    beta: float,
    d: int = 2,
    slope_limit: float = 0.2,
) -> AssumptionReport:
    """Check that kr_hi^2 / (N^(-beta/d) + l1^2) does not grow with N.

    Only the trend is checked; the constant is reported, never asserted.
    """
    Ns = sorted(traces)
    medians = []
    for n in Ns:
        ratios = [
            hi * hi / (n ** (-beta / d) + l1 * l1)
            for trace in traces[n]
            for hi, l1 in zip(trace.kr_hi, trace.l1, strict=True)
        ]
        medians.append(float(np.median(ratios)) if ratios else math.nan)
    constants = {f"ratio_N{n}": m for n, m in zip(Ns, medians, strict=True)}
    violations: list[str] = []
    finite = [(n, m) for n, m in zip(Ns, medians, strict=True) if math.isfinite(m) and m > 0]
    if len(finite) >= 2:
        fit = linregress(np.log([n for n, _ in finite]), np.log([m for _, m in finite]))
        constants["log_slope"] = float(fit.slope)
        if fit.slope > slope_limit:
            violations.append(f"KR ratio grows with N (log-log slope {fit.slope:.3f})")
    return AssumptionReport(
        name="kr_trend", passed=not violations, constants=constants, violations=violations
    )
