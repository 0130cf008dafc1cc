"""Analytic initial data: finite Gaussian mixtures in the plane."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from vortexlab.errors import AssumptionViolation
from vortexlab.fields import GridField, grid_points
from vortexlab.models import Rho0Section

# Covariances below this determinant approach a point mass, which is not W^{2,inf}.
MIN_COV_DET = 1e-8


@dataclass(frozen=True, slots=True)
class GaussianMixture:
    weights: np.ndarray  # (k,)
    means: np.ndarray  # (k, 2)
    covs: np.ndarray  # (k, 2, 2)

    def __post_init__(self) -> None:
        if np.any(self.weights <= 0.0):
            raise AssumptionViolation("mixture weights must be positive")
        for cov in self.covs:
            if not np.allclose(cov, cov.T):
                raise AssumptionViolation("covariance matrices must be symmetric")
            if np.linalg.det(cov) < MIN_COV_DET or np.any(np.linalg.eigvalsh(cov) <= 0.0):
                raise AssumptionViolation(
                    "initial density degenerates to a point mass (violates W^{2,inf})"
                )

    @classmethod
    def gaussian(cls, mean, cov, mass: float = 1.0) -> GaussianMixture:
        return cls(
            np.array([mass], dtype=float),
            np.asarray(mean, dtype=float).reshape(1, 2),
            np.asarray(cov, dtype=float).reshape(1, 2, 2),
        )

    @classmethod
    def isotropic(cls, variance: float, mean=(0.0, 0.0), mass: float = 1.0) -> GaussianMixture:
        return cls.gaussian(mean, variance * np.eye(2), mass=mass)

    @classmethod
    def decay_profile(cls, c3_tilde: float) -> GaussianMixture:
        """c3 exp(-|x|^2 / c3), the extremal profile of the Gaussian-tail bound.

        Its total mass is pi c3^2, below one whenever c3 < 1/sqrt(pi).
        """
        return cls.isotropic(0.5 * c3_tilde, mass=math.pi * c3_tilde**2)

    @classmethod
    def from_config(cls, section: Rho0Section) -> GaussianMixture:
        if section.kind == "gaussian":
            return cls.gaussian(section.mean, section.cov)
        if section.kind == "decay_profile":
            return cls.decay_profile(float(section.c3_tilde))
        total = sum(c.weight for c in section.components)
        return cls(
            np.array([c.weight / total for c in section.components]),
            np.array([c.mean for c in section.components], dtype=float),
            np.array([c.cov for c in section.components], dtype=float),
        )

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def mean(self) -> np.ndarray:
        return (self.weights[:, None] * self.means).sum(axis=0) / self.mass

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for w, mu, cov in zip(self.weights, self.means, self.covs, strict=True):
            inv = np.linalg.inv(cov)
            d = x - mu
            q = np.einsum("...i,ij,...j->...", d, inv, d)
            out += w * np.exp(-0.5 * q) / (2.0 * math.pi * math.sqrt(np.linalg.det(cov)))
        return out

    def on_grid(self, L: float, M: int) -> GridField:
        return GridField(self.pdf(grid_points(L, M)), L)

    def heat_evolved(self, t: float) -> GaussianMixture:
        """Exact solution of d_t rho = Laplacian rho started from this mixture."""
        return GaussianMixture(self.weights, self.means, self.covs + 2.0 * t * np.eye(2))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF sampling: component by weight, then ndtri of uniforms."""
        probs = self.weights / self.mass
        which = rng.choice(len(probs), size=n, p=probs)
        z = ndtri(np.clip(rng.random((n, 2)), 1e-300, 1.0 - 2.0**-53))
        out = np.empty((n, 2))
        for k in range(len(probs)):
            sel = which == k
            chol = np.linalg.cholesky(self.covs[k])
            out[sel] = self.means[k] + z[sel] @ chol.T
        return out

    def tail_probability(self, radius: float) -> float:
        """P(|X| >= radius), exact for centered isotropic components, else a bound.

        Non-isotropic or off-center components are bounded through their largest
        eigenvalue and the shifted radius.
        """
        total = 0.0
        for w, mu, cov in zip(self.weights, self.means, self.covs, strict=True):
            lam = float(np.linalg.eigvalsh(cov).max())
            r = max(radius - float(np.linalg.norm(mu)), 0.0)
            total += w * math.exp(-(r * r) / (2.0 * lam))
        return total / self.mass
