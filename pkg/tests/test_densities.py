import math

import numpy as np
import pytest

from vortexlab.densities import GaussianMixture
from vortexlab.errors import AssumptionViolation
from vortexlab.models import Rho0Section


def test_isotropic_mass_and_pdf_peak():
    g = GaussianMixture.isotropic(0.5)
    assert g.mass == pytest.approx(1.0)
    assert float(g.pdf(np.zeros(2))) == pytest.approx(1.0 / (2.0 * math.pi * 0.5))


def test_decay_profile_shape():
    c3 = 0.1
    g = GaussianMixture.decay_profile(c3)
    assert g.mass == pytest.approx(math.pi * c3**2)
    x = np.array([[0.0, 0.0], [0.2, -0.1]])
    expected = c3 * np.exp(-np.sum(x * x, axis=-1) / c3)
    np.testing.assert_allclose(g.pdf(x), expected, rtol=1e-13)


def test_on_grid_mass():
    g = GaussianMixture.gaussian([0.5, -0.25], [[0.6, 0.1], [0.1, 0.4]])
    assert g.on_grid(6.0, 128).mass() == pytest.approx(1.0, abs=1e-10)


def test_heat_evolved_adds_2t_to_covariance():
    g = GaussianMixture.isotropic(1.0).heat_evolved(0.25)
    np.testing.assert_allclose(g.covs[0], 1.5 * np.eye(2))


def test_sample_moments():
    g = GaussianMixture.gaussian([1.0, -0.5], [[0.5, 0.2], [0.2, 0.3]])
    x = g.sample(40_000, np.random.default_rng(11))
    np.testing.assert_allclose(x.mean(axis=0), [1.0, -0.5], atol=0.02)
    np.testing.assert_allclose(np.cov(x.T), [[0.5, 0.2], [0.2, 0.3]], atol=0.02)


def test_mixture_from_config_normalizes_weights():
    section = Rho0Section(
        kind="mixture",
        components=[
            {"weight": 3.0, "mean": [-1.0, 0.0], "cov": [[0.2, 0.0], [0.0, 0.2]]},
            {"weight": 1.0, "mean": [1.0, 0.0], "cov": [[0.2, 0.0], [0.0, 0.2]]},
        ],
    )
    g = GaussianMixture.from_config(section)
    np.testing.assert_allclose(g.weights, [0.75, 0.25])
    np.testing.assert_allclose(g.mean(), [-0.5, 0.0])


def test_tail_probability_exact_for_centered_isotropic():
    g = GaussianMixture.isotropic(0.5)
    assert g.tail_probability(1.5) == pytest.approx(math.exp(-(1.5**2) / (2 * 0.5)))


def test_tail_probability_bounds_off_center_component():
    g = GaussianMixture.gaussian([0.5, 0.0], [[0.3, 0.0], [0.0, 0.2]])
    x = g.sample(100_000, np.random.default_rng(5))
    empirical = float(np.mean(np.linalg.norm(x, axis=1) >= 1.5))
    assert empirical <= g.tail_probability(1.5)


def test_point_mass_rejected():
    with pytest.raises(AssumptionViolation, match="point mass"):
        GaussianMixture.isotropic(1e-6)


def test_negative_weight_rejected():
    with pytest.raises(AssumptionViolation):
        GaussianMixture(np.array([-1.0]), np.zeros((1, 2)), np.eye(2)[None])
