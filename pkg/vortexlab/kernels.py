"""Biot-Savart kernel K, its bounded antiderivative K0, and the table of K * V^N.

Perp convention: x^perp = (-x2, x1), so a positive point vortex at the origin
turns counterclockwise. With numpy's transform convention the symbol of K is
-i xi^perp / |xi|^2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft

from vortexlab.errors import ConfigError, OutOfBoxError, SingularInputError
from vortexlab.fields import GridField, grid_points, nyquist_mask, wavenumbers
from vortexlab.models import AssumptionReport
from vortexlab.mollifier import (
    MollifierSpec,
    check_assumption_AV,
    eval_VN,
    normalization_constant,
    tail_mass,
)

logger = logging.getLogger(__name__)

K0_BOUND = 0.25


def perp(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.stack([-x[..., 1], x[..., 0]], axis=-1)


def eval_K(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularInputError("Biot-Savart kernel is singular at x = 0")
    return perp(x) / (2.0 * math.pi * r2)[..., None]


def eval_K0(x) -> np.ndarray:
    """(1/2pi) arctan(x1/x2) times the identity; |entries| <= 1/4."""
    x = np.asarray(x, dtype=float)
    if np.any(x[..., 1] == 0.0):
        raise SingularInputError("K0 is singular on the line x2 = 0")
    scale = np.arctan(x[..., 0] / x[..., 1]) / (2.0 * math.pi)
    return scale[..., None, None] * np.eye(2)


def velocity_multiplier(L: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Fourier symbol of K on the periodic box, zero mode and Nyquist lines removed."""
    k1, k2 = wavenumbers(L, M)
    k_sq = k1 * k1 + k2 * k2
    k_sq[0, 0] = 1.0
    keep = nyquist_mask(M)
    stream = np.where(keep, -1j / k_sq, 0.0)
    stream[0, 0] = 0.0
    # xi^perp = (-k2, k1)
    return -k2 * stream, k1 * stream


def rotation_correction(points: np.ndarray, L: float, mass: float = 1.0) -> np.ndarray:
    """Velocity removed by the mean-free periodic inversion: + m x^perp / (2 A).

    On a square lattice the periodic inverse Laplacian differs from the
    whole-space one by -|x|^2/(4A) up to quartic terms; its perpendicular
    gradient is a rigid rotation.
    """
    area = (2.0 * L) ** 2
    return mass * perp(points) / (2.0 * area)


def _reflect(values: np.ndarray) -> np.ndarray:
    """values[(M - j) % M] on both axes: the value at -x."""
    return np.roll(np.flip(values, axis=(0, 1)), shift=(1, 1), axis=(0, 1))


@dataclass(frozen=True, slots=True)
class KernelTable:
    """Grid values of K * V^N on [-L, L)^2; immutable once built."""

    field: GridField
    mollifier: MollifierSpec
    spectrum: np.ndarray  # (M, M, 2) periodic part, origin at index 0
    mass: float = 1.0

    @property
    def L(self) -> float:
        return self.field.L

    @property
    def M(self) -> int:
        return self.field.M

    @property
    def h(self) -> float:
        return self.field.h

    @classmethod
    def from_field(cls, values: GridField, spec: MollifierSpec) -> KernelTable:
        """Rebuild a table from stored grid values (e.g. a field file)."""
        if values.components != 2:
            raise ConfigError("an interaction table holds 2-vector values")
        points = values.points()
        mass = float(eval_VN(spec, points).sum() * values.h**2)
        rotation = rotation_correction(points, values.L, mass)
        periodic = values.values - 0.5 * (rotation - _reflect(rotation))
        origin0 = fft.ifftshift(periodic, axes=(0, 1))
        spectrum = fft.fft2(origin0, axes=(0, 1))
        return cls(values, spec, spectrum, mass)


def build_interaction_table(
    moll: MollifierSpec,
    L: float,
    M: int,
    tail_tolerance: float = 1e-10,
    workers: int | None = None,
) -> KernelTable:
    """Tabulate K * V^N on the box via the Fourier multiplier of K.

    Values are made exactly antisymmetric on the grid; the origin node is
    exactly zero.
    """
    if M < 8 or M & (M - 1):
        raise ConfigError(f"table size M must be a power of two >= 8, got {M}")
    outside = tail_mass(moll, L)
    if outside > tail_tolerance:
        raise ConfigError(
            f"V^N mass outside the table box is {outside:.3e} > {tail_tolerance:.1e}; "
            f"increase L (currently {L})"
        )
    points = grid_points(L, M)
    vn = eval_VN(moll, points)
    h = 2.0 * L / M
    mass = float(vn.sum() * h * h)
    # origin at index 0 for the transform
    v_hat = fft.fft2(fft.ifftshift(vn), workers=workers)
    m1, m2 = velocity_multiplier(L, M)
    spectrum = np.stack([m1 * v_hat, m2 * v_hat], axis=-1)
    periodic = fft.ifft2(spectrum, axes=(0, 1), workers=workers).real
    periodic = fft.fftshift(periodic, axes=(0, 1))
    values = periodic + rotation_correction(points, L, mass)
    values = 0.5 * (values - _reflect(values))
    logger.debug("built interaction table N=%d L=%.3g M=%d mass=%.12f", moll.N, L, M, mass)
    return KernelTable(GridField(values, L), moll, spectrum, mass)


def spectral_divergence(table: KernelTable) -> float:
    """max over modes of |xi . u_hat(xi)| relative to max |xi| |u_hat|."""
    k1, k2 = wavenumbers(table.L, table.M)
    s = table.spectrum
    div = np.abs(k1 * s[..., 0] + k2 * s[..., 1])
    scale = np.abs(s).max() * np.sqrt(k1 * k1 + k2 * k2).max()
    return float(div.max() / scale) if scale > 0 else 0.0


def interpolate(table: KernelTable, z) -> np.ndarray:
    """Bilinear interpolation of the table at points z (..., 2) with |z_i| <= L - h.

    The table is not periodic, so the last cell [L - h, L) has no right-hand
    node and is outside the interpolation range.
    """
    z = np.asarray(z, dtype=float)
    L, h = table.L, table.h
    if np.any(np.abs(z) > L - h):
        raise OutOfBoxError(
            f"interaction argument outside the table range |z| <= {L - h:.6g}; "
            "the stopping time should have fired"
        )
    M = table.M
    s = (z + L) / h
    i0 = np.clip(np.floor(s).astype(np.intp), 0, M - 2)
    frac = s - i0
    a0, b0 = i0[..., 0], i0[..., 1]
    a1, b1 = a0 + 1, b0 + 1
    v = table.field.values
    f1 = frac[..., 0, None]
    f2 = frac[..., 1, None]
    return (
        (1.0 - f1) * (1.0 - f2) * v[a0, b0]
        + f1 * (1.0 - f2) * v[a1, b0]
        + (1.0 - f1) * f2 * v[a0, b1]
        + f1 * f2 * v[a1, b1]
    )


def quadrature_convolution(
    moll: MollifierSpec,
    z,
    angles: int = 512,
    panels_per_bandwidth: int = 2,
    order: int = 12,
    reach: float = 40.0,
) -> np.ndarray:
    """Direct real-space (K * V^N)(z) by polar quadrature centered at z.

    In polar coordinates around z the 1/|w| singularity of K cancels the
    Jacobian, leaving a bounded integrand: trapezoid in angle, Gauss-Legendre
    panels in radius.
    """
    z = np.asarray(z, dtype=float).reshape(2)
    b = moll.bandwidth
    r_max = float(np.linalg.norm(z)) + reach * b
    panels = max(8, int(math.ceil(r_max / b * panels_per_bandwidth)))
    nodes, weights = leggauss(order)
    edges = np.linspace(0.0, r_max, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    radii = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    r_weights = (half[:, None] * weights[None, :]).ravel()

    phi = 2.0 * math.pi * np.arange(angles) / angles
    direction = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    total = np.zeros(2)
    for r, wr in zip(radii, r_weights, strict=True):
        values = eval_VN(moll, z[None, :] - r * direction)
        # K(w) dw = (1/2pi) e_phi^perp dr dphi
        total += wr * (perp(direction) * values[:, None]).sum(axis=0)
    return total * (2.0 * math.pi / angles) / (2.0 * math.pi)


def k0_bound_report(samples: int = 1_000_000, seed: int = 0) -> dict[str, float]:
    """Largest |K0| entry over random inputs; the admissibility bound is 1/4."""
    rng = np.random.default_rng(seed)
    x = rng.normal(scale=10.0, size=(samples, 2))
    x[x[:, 1] == 0.0, 1] = 1e-300
    largest = float(np.abs(np.arctan(x[:, 0] / x[:, 1])).max() / (2.0 * math.pi))
    return {"max_entry": largest, "bound": K0_BOUND}


# --------------------
# Self-test suite
# --------------------
def _report(name: str, constants: dict[str, float], problems: list[str]) -> AssumptionReport:
    return AssumptionReport(
        name=name, passed=not problems, constants=constants, violations=problems
    )


def selftest(
    moll: MollifierSpec,
    L: float,
    M: int,
    samples: int = 100_000,
    far_points: int = 16,
    tolerance: float = 1e-4,
    seed: int = 0,
    workers: int | None = None,
) -> list[AssumptionReport]:
    """Kernel and mollifier identities on random points plus a built table.

    The table is compared against the direct quadrature at grid nodes with
    3b <= |z| <= 4b (b the bandwidth) and |z| <= L/8, where the lattice images
    beyond the rigid rotation stay below 5e-5 relative.
    """
    rng = np.random.default_rng(seed)
    reports: list[AssumptionReport] = []

    c = normalization_constant()
    closed = math.e / (4.0 * math.pi)
    reports.append(
        _report(
            "normalization",
            {"quadrature": c, "closed_form": closed},
            [] if abs(c - closed) <= 1e-12 * closed else [f"C={c!r} differs from e/(4 pi)"],
        )
    )
    reports.append(check_assumption_AV(moll))

    x = rng.normal(scale=5.0, size=(samples, 2))
    x = x[np.any(x != 0.0, axis=-1)]
    k = eval_K(x)
    odd = float(np.abs(eval_K(-x) + k).max())
    magnitude = np.linalg.norm(k, axis=-1) * 2.0 * math.pi * np.linalg.norm(x, axis=-1)
    law = float(np.abs(magnitude - 1.0).max())
    problems = []
    if odd > 1e-15:
        problems.append(f"K(-x) + K(x) reaches {odd:.3e}")
    if law > 1e-12:
        problems.append(f"|K(x)| 2 pi |x| departs from 1 by {law:.3e}")
    reports.append(_report("biot_savart", {"oddness": odd, "magnitude_law": law}, problems))

    table = build_interaction_table(moll, L, M, workers=workers)
    v = table.field.values
    origin = float(np.abs(v[M // 2, M // 2]).max())
    antisym = float(np.abs(v + _reflect(v)).max())
    div = spectral_divergence(table)
    problems = []
    if origin != 0.0:
        problems.append(f"table origin value {origin:.3e} is not zero")
    if antisym != 0.0:
        problems.append(f"table antisymmetry defect {antisym:.3e}")
    if div > 1e-12:
        problems.append(f"spectral divergence {div:.3e}")
    if abs(table.mass - 1.0) > 1e-10:
        problems.append(f"grid mass of V^N is {table.mass!r}")

    b = moll.bandwidth
    points = table.field.points()
    r = np.linalg.norm(points, axis=-1)
    ring = np.argwhere((r >= 3.0 * b) & (r <= min(4.0 * b, L / 8.0)))
    chosen = ring[rng.choice(len(ring), size=min(far_points, len(ring)), replace=False)]
    worst = 0.0
    for i, j in chosen:
        exact = quadrature_convolution(moll, points[i, j])
        worst = max(worst, float(np.linalg.norm(v[i, j] - exact) / np.linalg.norm(exact)))
    if worst > tolerance:
        problems.append(f"table vs quadrature relative error {worst:.3e} > {tolerance:.1e}")
    reports.append(
        _report(
            "interaction_table",
            {
                "origin": origin,
                "antisymmetry": antisym,
                "divergence": div,
                "quadrature_error": worst,
            },
            problems,
        )
    )
    k0 = k0_bound_report(samples=samples, seed=seed)
    reports.append(
        _report(
            "K0_bound",
            k0,
            [] if k0["max_entry"] <= k0["bound"] else [f"K0 entry {k0['max_entry']!r} > 1/4"],
        )
    )
    return reports
