"""Uniform grid fields on the periodicized box [-L, L)^2.

Node (j1, j2) sits at x = (-L + j1 h, -L + j2 h) with h = 2L/M, so the box
center is node (M/2, M/2). Values are indexed ``[j1, j2]`` (``indexing="ij"``).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import fft

from vortexlab.errors import ConfigError, ExcessiveShiftError, OutOfBoxError
from vortexlab.mollifier import MollifierSpec, cutoff_radius, eval_VN, eval_VN_gradient

logger = logging.getLogger(__name__)

GradientMethod = Literal["spectral", "central"]
ShiftMethod = Literal["fourier", "bilinear"]


@dataclass(frozen=True, slots=True)
class GridField:
    values: np.ndarray
    L: float

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim not in (2, 3) or v.shape[0] != v.shape[1]:
            raise ConfigError(f"grid field must be M x M (x components), got shape {v.shape}")
        if v.shape[0] < 8:
            raise ConfigError(f"grid rule: M must be >= 8, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ConfigError("grid field holds non-finite values")

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def components(self) -> int:
        return 1 if self.values.ndim == 2 else self.values.shape[2]

    def axis(self) -> np.ndarray:
        return grid_axis(self.L, self.M)

    def points(self) -> np.ndarray:
        return grid_points(self.L, self.M)

    def mass(self) -> float:
        return float(self.values.sum() * self.h**2)

    def peak(self) -> float:
        return float(self.values.max())

    def same_grid(self, other: GridField) -> bool:
        return self.M == other.M and math.isclose(self.L, other.L)


def grid_axis(L: float, M: int) -> np.ndarray:
    return -L + (2.0 * L / M) * np.arange(M)


def grid_points(L: float, M: int) -> np.ndarray:
    axis = grid_axis(L, M)
    return np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)


def wavenumbers(L: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Angular wavenumbers (k1, k2) broadcast to M x M, numpy FFT ordering."""
    k = 2.0 * math.pi * fft.fftfreq(M, d=2.0 * L / M)
    return np.meshgrid(k, k, indexing="ij")


def nyquist_mask(M: int) -> np.ndarray:
    """False on the Nyquist row and column, where odd multipliers are dropped."""
    keep = np.ones(M, dtype=bool)
    keep[M // 2] = False
    return keep[:, None] & keep[None, :]


def minimum_image(d: np.ndarray, L: float) -> np.ndarray:
    period = 2.0 * L
    return d - period * np.round(d / period)


def check_inside(points: np.ndarray, L: float, what: str = "particle") -> None:
    points = np.asarray(points, dtype=float)
    outside = np.any(np.abs(points) >= L, axis=-1)
    if np.any(outside):
        worst = float(np.abs(points).max())
        raise OutOfBoxError(
            f"{int(outside.sum())} {what}(s) outside the box |x| < {L} (max {worst:.4g})"
        )


def accumulate_kernel(
    positions: np.ndarray,
    L: float,
    M: int,
    kernel: Callable[[np.ndarray], np.ndarray],
    cutoff: float,
    chunk: int = 16,
    workers: int = 1,
) -> np.ndarray:
    """Sum ``kernel(x - X_i)`` over particles at every grid node.

    Distances use the minimum image of the periodic box. When the cutoff
    radius covers less than the box, each particle only touches its patch.
    Partial grids are merged in chunk order, so the result does not depend
    on ``workers``.
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    h = 2.0 * L / M
    half = int(math.ceil(cutoff / h))
    use_patch = 2 * half + 1 < M
    axis = grid_axis(L, M)
    points = grid_points(L, M)

    def full(block: np.ndarray) -> np.ndarray:
        d = minimum_image(points[None, :, :, :] - block[:, None, None, :], L)
        return kernel(d).sum(axis=0)

    offsets = np.arange(-half, half + 1)

    def patch(block: np.ndarray) -> np.ndarray:
        centers = np.rint((block + L) / h).astype(int)
        i1 = (centers[:, 0, None] + offsets[None, :]) % M
        i2 = (centers[:, 1, None] + offsets[None, :]) % M
        x1 = axis[i1][:, :, None]
        x2 = axis[i2][:, None, :]
        d = np.stack(
            np.broadcast_arrays(x1 - block[:, 0, None, None], x2 - block[:, 1, None, None]),
            axis=-1,
        )
        vals = kernel(minimum_image(d, L))
        flat = (i1[:, :, None] * M + i2[:, None, :]).ravel()
        return np.bincount(flat, weights=vals.ravel(), minlength=M * M).reshape(M, M)

    work = patch if use_patch else full
    blocks = [positions[s : s + chunk] for s in range(0, len(positions), chunk)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(work, blocks))
    else:
        partials = [work(b) for b in blocks]
    total = np.zeros((M, M))
    for p in partials:
        total += p
    return total


def _positions_of(ensemble_or_positions) -> np.ndarray:
    positions = getattr(ensemble_or_positions, "positions", ensemble_or_positions)
    return np.asarray(positions, dtype=float).reshape(-1, 2)


def mollified_density(
    ensemble, spec: MollifierSpec, L: float, M: int, workers: int = 1
) -> GridField:
    """rho^N = (1/N) sum_i V^N(x - X_i) sampled on the grid."""
    positions = _positions_of(ensemble)
    check_inside(positions, L)
    total = accumulate_kernel(
        positions,
        L,
        M,
        lambda d: eval_VN(spec, d),
        cutoff_radius(spec),
        workers=workers,
    )
    return GridField(total / len(positions), L)


def mollifier_score_density(
    ensemble, spec: MollifierSpec, L: float, M: int, workers: int = 1
) -> GridField:
    """sum_i |grad V^N(x - X_i)|^2 on the grid (numerator of the quadratic variation)."""
    positions = _positions_of(ensemble)
    check_inside(positions, L)

    def squared_gradient(d: np.ndarray) -> np.ndarray:
        g = eval_VN_gradient(spec, d)
        return np.sum(g * g, axis=-1)

    total = accumulate_kernel(
        positions, L, M, squared_gradient, cutoff_radius(spec), workers=workers
    )
    return GridField(total, L)


def _spectral_derivatives(values: np.ndarray, L: float) -> np.ndarray:
    M = values.shape[0]
    k1, k2 = wavenumbers(L, M)
    keep = nyquist_mask(M)
    spectrum = fft.fft2(values)
    d1 = fft.ifft2(1j * k1 * keep * spectrum).real
    d2 = fft.ifft2(1j * k2 * keep * spectrum).real
    return np.stack([d1, d2], axis=-1)


def _central_derivatives(values: np.ndarray, h: float) -> np.ndarray:
    d1 = (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2.0 * h)
    d2 = (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1)) / (2.0 * h)
    return np.stack([d1, d2], axis=-1)


def gradient(field: GridField, method: GradientMethod = "spectral") -> GridField:
    if field.components != 1:
        raise ConfigError("gradient expects a scalar field")
    if method == "spectral":
        return GridField(_spectral_derivatives(field.values, field.L), field.L)
    if method == "central":
        return GridField(_central_derivatives(field.values, field.h), field.L)
    raise ConfigError(f"unknown gradient method {method!r}")


def hessian(field: GridField) -> np.ndarray:
    """Spectral second derivatives, shape (M, M, 2, 2)."""
    M = field.M
    k1, k2 = wavenumbers(field.L, M)
    spectrum = fft.fft2(field.values)
    keep = nyquist_mask(M)
    out = np.empty((M, M, 2, 2))
    out[..., 0, 0] = fft.ifft2(-k1 * k1 * spectrum).real
    out[..., 1, 1] = fft.ifft2(-k2 * k2 * spectrum).real
    out[..., 0, 1] = out[..., 1, 0] = fft.ifft2(-k1 * k2 * keep * spectrum).real
    return out


def shift_field(
    field: GridField,
    a,
    method: ShiftMethod = "fourier",
    max_fraction: float = 0.5,
) -> GridField:
    """Resample x -> x - a, i.e. return g with g(x) = f(x - a).

    The Fourier path is exact for band-limited fields; the bilinear path is
    exact for whole-cell shifts.
    """
    a = np.asarray(a, dtype=float).reshape(2)
    if np.any(np.abs(a) > max_fraction * field.L):
        raise ExcessiveShiftError(
            f"shift {a.tolist()} exceeds {max_fraction} of the box half-width {field.L}"
        )
    if not np.any(a):
        return field
    values = field.values
    axes = (0, 1)
    if method == "fourier":
        k1, k2 = wavenumbers(field.L, field.M)
        phase = np.exp(-1j * (k1 * a[0] + k2 * a[1]))
        if values.ndim == 3:
            phase = phase[..., None]
        spectrum = fft.fft2(values, axes=axes)
        return GridField(fft.ifft2(spectrum * phase, axes=axes).real, field.L)
    if method == "bilinear":
        s = a / field.h
        n = np.floor(s).astype(int)
        frac = s - n
        base = np.roll(values, shift=(int(n[0]), int(n[1])), axis=axes)
        next1 = np.roll(base, 1, axis=0)
        next2 = np.roll(base, 1, axis=1)
        next12 = np.roll(next1, 1, axis=1)
        out = (
            (1.0 - frac[0]) * (1.0 - frac[1]) * base
            + frac[0] * (1.0 - frac[1]) * next1
            + (1.0 - frac[0]) * frac[1] * next2
            + frac[0] * frac[1] * next12
        )
        return GridField(out, field.L)
    raise ConfigError(f"unknown shift method {method!r}")


def bilinear_sample(field: GridField, points: np.ndarray) -> np.ndarray:
    """Periodic bilinear interpolation of ``field`` at arbitrary points."""
    points = np.asarray(points, dtype=float)
    s = (points + field.L) / field.h
    i0 = np.floor(s).astype(int)
    frac = s - i0
    M = field.M
    a0 = i0[..., 0] % M
    b0 = i0[..., 1] % M
    a1 = (a0 + 1) % M
    b1 = (b0 + 1) % M
    v = field.values
    f1 = frac[..., 0]
    f2 = frac[..., 1]
    if v.ndim == 3:
        f1 = f1[..., None]
        f2 = f2[..., None]
    return (
        (1.0 - f1) * (1.0 - f2) * v[a0, b0]
        + f1 * (1.0 - f2) * v[a1, b0]
        + (1.0 - f1) * f2 * v[a0, b1]
        + f1 * f2 * v[a1, b1]
    )
