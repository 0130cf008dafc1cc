"""The exponential mollifier V and its moderate-interaction scaling V^N.

V(y) = C exp(-sqrt(1 + |y|^2)) with C chosen so that the integral of V is one,
and V^N(y) = N^beta V(N^(beta/d) y) in dimension d = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

import numpy as np
from scipy import integrate, optimize

from vortexlab.errors import AssumptionViolation
from vortexlab.models import AssumptionReport

DIMENSION = 2


@lru_cache(maxsize=1)
def normalization_constant() -> float:
    """Return C so that C * exp(-sqrt(1+|y|^2)) integrates to one over the plane.

    Computed once by radial quadrature and cached. In d = 2 the substitution
    s = sqrt(1 + r^2) gives the closed form e / (4 pi), which the tests use as
    an oracle.
    """
    mass, _ = integrate.quad(
        lambda r: 2.0 * math.pi * r * math.exp(-math.sqrt(1.0 + r * r)),
        0.0,
        np.inf,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    return 1.0 / mass


def admissibility_violations(beta: float, alpha: float, d: int = DIMENSION) -> list[str]:
    """List every admissibility condition on (beta, alpha) that fails.

    An empty list means beta sits in the intersection of the two ranges
    required by the entropy estimate.
    """
    problems: list[str] = []
    if not 0.0 < beta < 1.0:
        problems.append(f"beta={beta} must lie in (0, 1)")
    if alpha <= d / 2:
        problems.append(f"alpha={alpha} must exceed d/2={d / 2}")
    bound_1 = 1.0 / (2.0 * (1.0 + 1.0 / d))
    if beta >= bound_1:
        problems.append(f"beta={beta} violates beta < 1/(2(1+1/d)) = {bound_1:.6f}")
    bound_2 = 1.0 / (1.0 + 2.0 / d + 2.0 * alpha)
    if beta >= bound_2:
        problems.append(f"beta={beta} violates beta < 1/(1+2/d+2*alpha) = {bound_2:.6f}")
    return problems


@dataclass(frozen=True, slots=True)
class MollifierSpec:
    """Scaling data (beta, alpha, N) of the moderately interacting system."""

    beta: float
    alpha: float
    N: int
    d: int = DIMENSION

    def __post_init__(self) -> None:
        if self.d != DIMENSION:
            raise AssumptionViolation(f"only d = {DIMENSION} is supported, got d={self.d}")
        if self.N < 1:
            raise AssumptionViolation(f"particle count must be >= 1, got N={self.N}")
        problems = admissibility_violations(self.beta, self.alpha, self.d)
        if problems:
            raise AssumptionViolation("; ".join(problems))

    @property
    def normalization(self) -> float:
        return normalization_constant()

    @property
    def amplitude(self) -> float:
        """N^beta, the peak scaling of V^N."""
        return float(self.N) ** self.beta

    @property
    def dilation(self) -> float:
        """N^(beta/d), the spatial contraction of V^N."""
        return float(self.N) ** (self.beta / self.d)

    @property
    def bandwidth(self) -> float:
        return 1.0 / self.dilation

    @property
    def exit_radius(self) -> float:
        """Radius N^beta of the ball used by the stopping time."""
        return float(self.N) ** self.beta


def eval_V(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    return normalization_constant() * np.exp(-np.sqrt(1.0 + r2))


def eval_V_gradient(y: np.ndarray) -> np.ndarray:
    # grad V = -V(y) y / sqrt(1+|y|^2), so |grad V| < V everywhere
    y = np.asarray(y, dtype=float)
    s = np.sqrt(1.0 + np.sum(y * y, axis=-1))
    value = normalization_constant() * np.exp(-s)
    return -(value / s)[..., None] * y


def eval_VN(spec: MollifierSpec, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return spec.amplitude * eval_V(spec.dilation * y)


def eval_VN_gradient(spec: MollifierSpec, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return spec.amplitude * spec.dilation * eval_V_gradient(spec.dilation * y)


def tail_mass(spec: MollifierSpec, radius: float) -> float:
    """Mass of V^N outside the disc of the given radius.

    Closed form (e/2)(s+1)exp(-s) with s = sqrt(1 + (N^(beta/2) R)^2).
    """
    s = math.sqrt(1.0 + (spec.dilation * radius) ** 2)
    return 0.5 * math.e * (s + 1.0) * math.exp(-s)


def tail_radius(spec: MollifierSpec, tolerance: float) -> float:
    """Smallest radius whose outside holds at most ``tolerance`` of the mass of V^N."""
    if not 0.0 < tolerance < 1.0:
        raise AssumptionViolation(f"tail tolerance must lie in (0, 1), got {tolerance}")
    def excess(s: float) -> float:
        return 0.5 * math.e * (s + 1.0) * math.exp(-s) - tolerance

    s = optimize.brentq(excess, 1.0, 800.0, xtol=1e-12)
    return math.sqrt(s * s - 1.0) / spec.dilation


def cutoff_radius(spec: MollifierSpec, relative: float = 1e-16) -> float:
    """Radius beyond which V^N drops below ``relative`` times its peak."""
    s = 1.0 - math.log(relative)
    return math.sqrt(s * s - 1.0) / spec.dilation


@lru_cache(maxsize=1)
def gradient_l1_norm() -> float:
    """||grad V||_1, entering the admissible time horizon."""
    c = normalization_constant()
    value, _ = integrate.quad(
        lambda r: 2.0 * math.pi * r * c * math.exp(-math.sqrt(1.0 + r * r)) * r
        / math.sqrt(1.0 + r * r),
        0.0,
        np.inf,
        limit=200,
    )
    return value


@lru_cache(maxsize=1)
def score_energy() -> float:
    """Integral of |grad V|^2 / V over the plane."""
    c = normalization_constant()
    value, _ = integrate.quad(
        lambda r: 2.0 * math.pi * r * c * math.exp(-math.sqrt(1.0 + r * r)) * r * r
        / (1.0 + r * r),
        0.0,
        np.inf,
        epsabs=1e-14,
        epsrel=1e-12,
        limit=200,
    )
    return value


class MollifierProfile(Protocol):
    def value(self, y: np.ndarray) -> np.ndarray: ...

    def gradient(self, y: np.ndarray) -> np.ndarray: ...


class ExponentialProfile:
    """The reference mollifier exp(-sqrt(1+|y|^2)), normalized."""

    def value(self, y: np.ndarray) -> np.ndarray:
        return eval_V(y)

    def gradient(self, y: np.ndarray) -> np.ndarray:
        return eval_V_gradient(y)


def _radial_growth(radii: np.ndarray, ratio: np.ndarray, bins: int = 24) -> float:
    """Ratio of the outermost populated bin maximum to the inner-half maximum."""
    r_max = float(radii.max())
    edges = np.linspace(0.0, r_max, bins + 1)
    which = np.clip(np.digitize(radii, edges) - 1, 0, bins - 1)
    maxima = np.full(bins, -np.inf)
    np.maximum.at(maxima, which, ratio)
    inner = maxima[: bins // 2].max()
    outer = maxima[-1]
    if not np.isfinite(inner) or inner <= 0.0:
        return math.inf if outer > 0.0 else 1.0
    return float(outer / inner)


def check_assumption_AV(
    spec: MollifierSpec,
    profile: MollifierProfile | None = None,
    radius: float = 60.0,
    points: int = 241,
    growth_limit: float = 1.1,
) -> AssumptionReport:
    """Numerically check |grad V| <= C V and V <= C (1+|y|^2)^(-alpha).

    Both ratios are sampled on a square grid of half-width ``radius``; a ratio
    whose outermost radial bin exceeds the inner-half maximum by more than
    ``growth_limit`` is treated as unbounded.
    """
    profile = profile or ExponentialProfile()
    axis = np.linspace(-radius, radius, points)
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    r = np.linalg.norm(grid, axis=-1)
    inside = r <= radius
    grid, r = grid[inside], r[inside]

    values = np.asarray(profile.value(grid), dtype=float)
    grads = np.linalg.norm(np.asarray(profile.gradient(grid), dtype=float), axis=-1)
    violations: list[str] = []

    positive = values > 1e-250
    if np.any(~positive & (grads > 0.0)):
        violations.append("gradient bound fails: grad V nonzero where V vanishes")
    grad_ratio = grads[positive] / values[positive]
    c_grad = float(grad_ratio.max())
    if _radial_growth(r[positive], grad_ratio) > growth_limit:
        violations.append("gradient bound |grad V| <= C V fails: ratio grows with |y|")

    decay_ratio = values * (1.0 + r * r) ** spec.alpha
    c_decay = float(decay_ratio.max())
    if _radial_growth(r, decay_ratio) > growth_limit:
        violations.append(
            f"decay bound V <= C (1+|y|^2)^(-{spec.alpha}) fails: ratio grows with |y|"
        )
    if np.any(values < 0.0):
        violations.append("V takes negative values")

    return AssumptionReport(
        name="A^V",
        passed=not violations,
        constants={"C_gradient": c_grad, "C_decay": c_decay, "C_d": max(c_grad, c_decay)},
        violations=violations,
    )
