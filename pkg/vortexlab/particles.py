"""Euler-Maruyama integration of the moderately interacting vortex system.

Positions are stored in the frame that moves with the common noise: an
ensemble holds ``relative = X - shift`` for every particle plus the shared
``shift`` X_t = sum sigma(s) dB_s. The drift depends only on differences
X^i - X^k, so it only ever sees ``relative``; the common term therefore
cancels exactly, not just up to rounding.

Random streams are split with ``numpy.random.SeedSequence``:
``SeedSequence(entropy=master_seed, spawn_key=(run_index, stream))`` where
``stream`` is 0 for the initial sample, 1 for the individual noises and 2 for
the common noise. Two runs that differ only in sigma share every draw.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Literal

import numpy as np
from scipy import fft

from vortexlab.densities import GaussianMixture
from vortexlab.errors import AssumptionViolation, ConfigError, OutOfBoxError
from vortexlab.fields import GridField, bilinear_sample, wavenumbers
from vortexlab.kernels import KernelTable, interpolate, perp
from vortexlab.models import SigmaSection

logger = logging.getLogger(__name__)

DriftMethod = Literal["direct", "mesh"]


class Stream(IntEnum):
    INITIAL = 0
    INDIVIDUAL = 1
    COMMON = 2


def derive_seed_sequence(
    master_seed: int, run_index: int, stream: Stream
) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(run_index, int(stream)))


def make_rng(master_seed: int, run_index: int, stream: Stream) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(master_seed, run_index, stream))


# --------------------
# Noise
# --------------------
@dataclass(frozen=True, slots=True)
class SigmaSchedule:
    """Spatially constant common-noise coefficient sigma(t).

    ``constant``: sigma(t) = matrix; ``cosine``: sigma(t) = cos(frequency t) matrix.
    Both are bounded by the spectral norm of ``matrix``.
    """

    matrix: np.ndarray
    profile: Literal["constant", "cosine"] = "constant"
    frequency: float = 1.0

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2) or not np.all(np.isfinite(m)):
            raise ConfigError("sigma must be a finite 2x2 matrix")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def zero(cls) -> SigmaSchedule:
        return cls(np.zeros((2, 2)))

    @classmethod
    def identity(cls, scale: float = 1.0) -> SigmaSchedule:
        return cls(scale * np.eye(2))

    @classmethod
    def from_config(cls, section: SigmaSection) -> SigmaSchedule:
        return cls(np.asarray(section.matrix, dtype=float), section.profile, section.frequency)

    def __call__(self, t: float) -> np.ndarray:
        if self.profile == "cosine":
            return math.cos(self.frequency * t) * self.matrix
        return self.matrix

    @property
    def sup_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, ord=2))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)


@dataclass(slots=True)
class NoiseConfig:
    """Noise sources of one run and the record of the common increments dB."""

    seed: int
    dt: float
    sigma: SigmaSchedule = field(default_factory=SigmaSchedule.zero)
    run_index: int = 0
    common_record: list[np.ndarray] = field(default_factory=list)
    _individual: np.random.Generator | None = field(default=None, repr=False)
    _common: np.random.Generator | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ConfigError(f"time step must be positive, got dt={self.dt}")

    @property
    def individual(self) -> np.random.Generator:
        if self._individual is None:
            self._individual = make_rng(self.seed, self.run_index, Stream.INDIVIDUAL)
        return self._individual

    @property
    def common(self) -> np.random.Generator:
        if self._common is None:
            self._common = make_rng(self.seed, self.run_index, Stream.COMMON)
        return self._common

    def common_increments(self) -> np.ndarray:
        if not self.common_record:
            return np.zeros((0, 2))
        return np.stack(self.common_record)


# --------------------
# Ensemble and trajectory
# --------------------
@dataclass(frozen=True, slots=True)
class ParticleEnsemble:
    relative: np.ndarray  # (N, 2), X - shift
    shift: np.ndarray = field(default_factory=lambda: np.zeros(2))
    t: float = 0.0

    def __post_init__(self) -> None:
        rel = np.asarray(self.relative, dtype=float)
        if rel.ndim != 2 or rel.shape[1] != 2 or rel.shape[0] < 1:
            raise ConfigError(f"ensemble positions must have shape (N, 2), got {rel.shape}")
        if not np.all(np.isfinite(rel)):
            raise ConfigError("ensemble holds non-finite positions")
        object.__setattr__(self, "relative", rel)
        object.__setattr__(self, "shift", np.asarray(self.shift, dtype=float).reshape(2))

    @classmethod
    def at(cls, positions, t: float = 0.0) -> ParticleEnsemble:
        return cls(np.asarray(positions, dtype=float).reshape(-1, 2), np.zeros(2), t)

    @property
    def N(self) -> int:
        return self.relative.shape[0]

    @property
    def positions(self) -> np.ndarray:
        return self.relative + self.shift


@dataclass(frozen=True, slots=True)
class ExitRecord:
    tau: float
    radius: float
    exited: bool


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Recorded frames of one run; ``relative[k] + shifts[k]`` are the positions."""

    times: np.ndarray  # (frames,)
    relative: np.ndarray  # (frames, N, 2)
    shifts: np.ndarray  # (frames, 2)
    dt: float
    steps: int

    @property
    def N(self) -> int:
        return self.relative.shape[1]

    @property
    def frames(self) -> int:
        return self.times.shape[0]

    def positions(self, frame: int) -> np.ndarray:
        return self.relative[frame] + self.shifts[frame]

    def ensemble(self, frame: int) -> ParticleEnsemble:
        return ParticleEnsemble(self.relative[frame], self.shifts[frame], float(self.times[frame]))


# --------------------
# Initial data
# --------------------
def _rejection_sample(rho0: GridField, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a grid density against a widened Gaussian envelope."""
    points = rho0.points()
    weights = rho0.values * rho0.h**2
    mean = np.einsum("ij,ijk->k", weights, points)
    centered = points - mean
    cov = np.einsum("ij,ijk,ijl->kl", weights, centered, centered)
    envelope = GaussianMixture.gaussian(mean, 2.0 * cov)
    ratio = rho0.values / envelope.pdf(points)
    bound = 1.1 * float(ratio.max())

    out: list[np.ndarray] = []
    have = 0
    while have < n:
        batch = max(2 * (n - have), 64)
        proposal = envelope.sample(batch, rng)
        inside = np.all(np.abs(proposal) < rho0.L, axis=1)
        proposal = proposal[inside]
        target = np.maximum(bilinear_sample(rho0, proposal), 0.0)
        u = rng.random(proposal.shape[0])
        accepted = proposal[u * bound * envelope.pdf(proposal) < target]
        out.append(accepted)
        have += accepted.shape[0]
    return np.concatenate(out)[:n]


def sample_initial(
    N: int,
    rho0: GaussianMixture | GridField,
    seed: int,
    run_index: int = 0,
    mass_tolerance: float = 1e-6,
) -> ParticleEnsemble:
    """N i.i.d. samples from rho0 on the initial-data stream of (seed, run_index)."""
    if N < 1:
        raise ConfigError(f"particle count must be >= 1, got N={N}")
    mass = rho0.mass if isinstance(rho0, GaussianMixture) else rho0.mass()
    if abs(mass - 1.0) > mass_tolerance:
        raise AssumptionViolation(f"initial density is not normalized (mass {mass:.8f})")
    rng = make_rng(seed, run_index, Stream.INITIAL)
    if isinstance(rho0, GaussianMixture):
        positions = rho0.sample(N, rng)
    else:
        if np.any(rho0.values < 0.0):
            raise AssumptionViolation("initial grid density takes negative values")
        positions = _rejection_sample(rho0, N, rng)
    return ParticleEnsemble.at(positions)


# --------------------
# Drift
# --------------------
def drift(ensemble: ParticleEnsemble, table: KernelTable, i: int) -> np.ndarray:
    """(1/N) sum_k (K * V^N)(X^i - X^k), self-term included."""
    rel = ensemble.relative
    return interpolate(table, rel[i] - rel).mean(axis=0)


def _direct_drift(rel: np.ndarray, table: KernelTable, chunk: int, workers: int) -> np.ndarray:
    n = rel.shape[0]

    def rows(start: int) -> np.ndarray:
        block = rel[start : start + chunk]
        return interpolate(table, block[:, None, :] - rel[None, :, :]).mean(axis=1)

    starts = range(0, n, chunk)
    if workers > 1 and n > chunk:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(rows, starts))
    else:
        parts = [rows(s) for s in starts]
    return np.concatenate(parts)


def _cic_weights(points: np.ndarray, L: float, M: int):
    h = 2.0 * L / M
    s = (points + L) / h
    i0 = np.floor(s).astype(np.intp)
    frac = s - i0
    a0 = i0[:, 0] % M
    b0 = i0[:, 1] % M
    a1 = (a0 + 1) % M
    b1 = (b0 + 1) % M
    f1, f2 = frac[:, 0], frac[:, 1]
    index = np.stack([a0 * M + b0, a1 * M + b0, a0 * M + b1, a1 * M + b1], axis=1)
    weight = np.stack(
        [(1 - f1) * (1 - f2), f1 * (1 - f2), (1 - f1) * f2, f1 * f2],
        axis=1,
    )
    return index, weight


def _mesh_drift(rel: np.ndarray, table: KernelTable) -> np.ndarray:
    """Cloud-in-cell scatter, periodic convolution with the table, gather.

    Both CIC passes act as the window sinc^2 per axis, removed in Fourier space.
    The rigid-rotation part of the table is not periodic and is added exactly.
    """
    L, M = table.L, table.M
    n = rel.shape[0]
    center = rel.mean(axis=0)
    local = rel - center
    if np.any(np.abs(local) >= L):
        raise OutOfBoxError("particle cloud wider than the interaction table box")
    index, weight = _cic_weights(local, L, M)
    counts = np.bincount(index.ravel(), weights=weight.ravel(), minlength=M * M)
    counts = counts.reshape(M, M) / n

    k1, k2 = wavenumbers(L, M)
    h = table.h
    window = (np.sinc(k1 * h / (2.0 * np.pi)) * np.sinc(k2 * h / (2.0 * np.pi))) ** 2
    density_hat = fft.fft2(counts) / (window * window)
    velocity = fft.ifft2(table.spectrum * density_hat[..., None], axes=(0, 1)).real

    flat = velocity.reshape(M * M, 2)
    gathered = (flat[index] * weight[..., None]).sum(axis=1)
    area = (2.0 * L) ** 2
    return gathered + table.mass * perp(local) / (2.0 * area)


def drift_all(
    ensemble: ParticleEnsemble,
    table: KernelTable,
    method: DriftMethod = "direct",
    workers: int = 1,
    chunk: int = 64,
) -> np.ndarray:
    """Drift of every particle, shape (N, 2).

    ``direct`` computes each row independently, so the result does not depend
    on ``workers``.
    """
    if method == "direct":
        return _direct_drift(ensemble.relative, table, chunk, workers)
    if method == "mesh":
        return _mesh_drift(ensemble.relative, table)
    raise ConfigError(f"unknown drift method {method!r}")


# --------------------
# Time stepping
# --------------------
def step_em(
    ensemble: ParticleEnsemble,
    table: KernelTable | None,
    noise: NoiseConfig,
    method: DriftMethod = "direct",
    workers: int = 1,
) -> ParticleEnsemble:
    """X <- X + drift dt + sqrt(2) dW^i + sigma(t) dB, with dB shared and recorded.

    ``table=None`` switches the interaction off.
    """
    dt = noise.dt
    sqrt_dt = math.sqrt(dt)
    dW = noise.individual.standard_normal((ensemble.N, 2)) * sqrt_dt
    dB = noise.common.standard_normal(2) * sqrt_dt
    noise.common_record.append(dB)

    rel = ensemble.relative + math.sqrt(2.0) * dW
    if table is not None:
        rel = rel + drift_all(ensemble, table, method, workers) * dt
    shift = ensemble.shift + noise.sigma(ensemble.t) @ dB
    return replace(ensemble, relative=rel, shift=shift, t=ensemble.t + dt)


def draw_common_path(noise: NoiseConfig, T: float) -> np.ndarray:
    """Record the common increments up to T without moving any particle.

    The common stream is separate from the individual one, so the increments
    match those a particle run with the same seed and run index would draw.
    """
    steps = int(round(T / noise.dt))
    sqrt_dt = math.sqrt(noise.dt)
    for _ in range(steps - len(noise.common_record)):
        noise.common_record.append(noise.common.standard_normal(2) * sqrt_dt)
    return noise.common_increments()


def _outside(positions: np.ndarray, radius: float) -> bool:
    return bool(np.any(np.sum(positions * positions, axis=1) >= radius * radius))


def simulate(
    ensemble: ParticleEnsemble,
    table: KernelTable | None,
    noise: NoiseConfig,
    T: float,
    radius: float,
    record_steps: set[int] | None = None,
    method: DriftMethod = "direct",
    workers: int = 1,
) -> tuple[Trajectory, ExitRecord]:
    """Step to T, stopping at the first step where a particle reaches ``radius``.

    Frames are recorded at step 0, at every step in ``record_steps`` (all steps
    when None) and at the stopping step.
    """
    steps = int(round(T / noise.dt))
    if steps < 1:
        raise ConfigError(f"horizon T={T} shorter than one step dt={noise.dt}")

    times: list[float] = []
    rels: list[np.ndarray] = []
    shifts: list[np.ndarray] = []

    def record(ens: ParticleEnsemble) -> None:
        times.append(ens.t)
        rels.append(ens.relative)
        shifts.append(ens.shift)

    record(ensemble)
    exit_record = ExitRecord(T, radius, False)
    if _outside(ensemble.positions, radius):
        exit_record = ExitRecord(0.0, radius, True)
        steps_done = 0
    else:
        steps_done = steps
        for k in range(1, steps + 1):
            ensemble = step_em(ensemble, table, noise, method, workers)
            if _outside(ensemble.positions, radius):
                record(ensemble)
                exit_record = ExitRecord(min(ensemble.t, T), radius, True)
                steps_done = k
                logger.info(
                    "stopping time fired at t=%.4f (N=%d, radius=%.3f)",
                    ensemble.t,
                    ensemble.N,
                    radius,
                )
                break
            if record_steps is None or k in record_steps:
                record(ensemble)

    trajectory = Trajectory(
        np.asarray(times), np.stack(rels), np.stack(shifts), noise.dt, steps_done
    )
    return trajectory, exit_record


def exit_time(trajectory: Trajectory, beta: float, N: int, T: float) -> ExitRecord:
    """First recorded time any particle has |X| >= N^beta, capped at T."""
    radius = float(N) ** beta
    for k in range(trajectory.frames):
        t = float(trajectory.times[k])
        if t > T:
            break
        if _outside(trajectory.positions(k), radius):
            return ExitRecord(t, radius, True)
    return ExitRecord(T, radius, False)
