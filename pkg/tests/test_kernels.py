import math

import numpy as np
import pytest
from conftest import build_spec

from vortexlab.errors import ConfigError, OutOfBoxError, SingularInputError
from vortexlab.fields import GridField, wavenumbers
from vortexlab.kernels import (
    K0_BOUND,
    KernelTable,
    build_interaction_table,
    eval_K,
    eval_K0,
    interpolate,
    k0_bound_report,
    perp,
    quadrature_convolution,
    selftest,
    spectral_divergence,
    velocity_multiplier,
)
from vortexlab.mollifier import tail_mass

TABLE_L, TABLE_M = 16.0, 512


@pytest.fixture(scope="module")
def table():
    return build_interaction_table(build_spec(), TABLE_L, TABLE_M)


def _newton(spec, z):
    """Velocity of a radial vorticity: K(z) times the mass inside |z|."""
    r = np.linalg.norm(z, axis=-1)
    inside = np.array([1.0 - tail_mass(spec, float(v)) for v in np.ravel(r)]).reshape(r.shape)
    return eval_K(z) * inside[..., None]


def test_perp_turns_counterclockwise():
    np.testing.assert_array_equal(perp(np.array([1.0, 0.0])), [0.0, 1.0])
    np.testing.assert_array_equal(perp(np.array([0.0, 1.0])), [-1.0, 0.0])


def test_K_is_odd_and_obeys_magnitude_law():
    x = np.random.default_rng(0).normal(scale=3.0, size=(100_000, 2))
    k = eval_K(x)
    np.testing.assert_array_equal(eval_K(-x), -k)
    magnitude = np.linalg.norm(k, axis=-1) * 2.0 * math.pi * np.linalg.norm(x, axis=-1)
    np.testing.assert_allclose(magnitude, 1.0, rtol=1e-13)


def test_K_singular_at_origin():
    with pytest.raises(SingularInputError):
        eval_K(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_K0_entries_bounded_and_diagonal():
    x = np.random.default_rng(1).normal(size=(1000, 2))
    k0 = eval_K0(x)
    assert np.abs(k0).max() <= K0_BOUND
    np.testing.assert_array_equal(k0[:, 0, 1], 0.0)
    np.testing.assert_array_equal(k0[:, 0, 0], k0[:, 1, 1])


def test_K0_singular_on_axis():
    with pytest.raises(SingularInputError):
        eval_K0(np.array([1.0, 0.0]))


def test_k0_bound_report():
    report = k0_bound_report(samples=10_000)
    assert report["bound"] == 0.25
    assert 0.2 < report["max_entry"] <= 0.25


def test_velocity_multiplier_is_divergence_free():
    m1, m2 = velocity_multiplier(3.0, 32)
    k1, k2 = wavenumbers(3.0, 32)
    assert m1[0, 0] == 0.0 and m2[0, 0] == 0.0
    assert not m1[16].any() and not m2[:, 16].any()
    np.testing.assert_allclose(k1 * m1 + k2 * m2, 0.0, atol=1e-15)


def test_table_origin_is_exactly_zero(table):
    M = table.M
    assert tuple(table.field.values[M // 2, M // 2]) == (0.0, 0.0)


def test_table_is_exactly_antisymmetric(table):
    v = table.field.values
    reflected = np.roll(np.flip(v, axis=(0, 1)), shift=(1, 1), axis=(0, 1))
    np.testing.assert_array_equal(v, -reflected)


def test_table_mass_and_divergence(table):
    assert table.mass == pytest.approx(1.0, abs=1e-10)
    assert spectral_divergence(table) < 1e-12


def test_table_matches_radial_velocity_law(table, spec):
    points = table.field.points()
    r = np.linalg.norm(points, axis=-1)
    ring = (r >= 1.0) & (r <= 2.0)
    expected = _newton(spec, points[ring])
    err = np.linalg.norm(table.field.values[ring] - expected, axis=-1)
    assert (err / np.linalg.norm(expected, axis=-1)).max() < 2e-4


def test_table_matches_direct_quadrature(table, spec):
    b = spec.bandwidth
    j = table.M // 2 + int(round(3.0 * b / table.h))
    node = table.field.points()[j, table.M // 2 + 2]
    exact = quadrature_convolution(spec, node)
    got = table.field.values[j, table.M // 2 + 2]
    assert np.linalg.norm(got - exact) / np.linalg.norm(exact) < 1e-4


def test_quadrature_obeys_radial_velocity_law(spec):
    z = np.array([0.8, -0.6])
    np.testing.assert_allclose(quadrature_convolution(spec, z), _newton(spec, z), rtol=1e-7)


def test_interpolate_at_nodes_and_bounds(table):
    points = table.field.points()
    z = points[300, 200]
    np.testing.assert_allclose(interpolate(table, z), table.field.values[300, 200], atol=1e-15)
    with pytest.raises(OutOfBoxError):
        interpolate(table, np.array([[0.0, 0.0], [TABLE_L, 0.0]]))


def test_interpolate_stops_at_the_last_node(table):
    h, M = table.h, table.M
    v = table.field.values
    top = table.field.points()[M - 1, M // 2]
    np.testing.assert_allclose(interpolate(table, top), v[M - 1, M // 2], atol=1e-15)
    inner = top - np.array([0.5 * h, 0.0])
    np.testing.assert_allclose(
        interpolate(table, inner), 0.5 * (v[M - 2, M // 2] + v[M - 1, M // 2]), atol=1e-15
    )
    # the cell [L - h, L) would need a node at L, which the table does not hold
    with pytest.raises(OutOfBoxError, match="table range"):
        interpolate(table, np.array([TABLE_L - 0.5 * h, 0.3]))
    with pytest.raises(OutOfBoxError):
        interpolate(table, np.array([0.3, -(TABLE_L - 0.5 * h)]))


def test_from_field_recovers_spectrum(table, spec):
    rebuilt = KernelTable.from_field(table.field, spec)
    assert rebuilt.mass == pytest.approx(table.mass, rel=1e-14)
    scale = np.abs(table.spectrum).max()
    np.testing.assert_allclose(rebuilt.spectrum, table.spectrum, atol=1e-9 * scale)


def test_from_field_rejects_scalar_values(spec):
    with pytest.raises(ConfigError):
        KernelTable.from_field(GridField(np.zeros((8, 8)), 1.0), spec)


def test_build_rejects_bad_sizes(spec):
    with pytest.raises(ConfigError, match="power of two"):
        build_interaction_table(spec, TABLE_L, 100)
    with pytest.raises(ConfigError, match="increase L"):
        build_interaction_table(spec, 4.0, 64)


def test_selftest_passes_on_resolved_table(spec):
    reports = selftest(spec, TABLE_L, TABLE_M, samples=10_000, far_points=2)
    failed = [(r.name, r.violations) for r in reports if not r.passed]
    assert failed == []
    assert {r.name for r in reports} == {
        "normalization",
        "A^V",
        "biot_savart",
        "interaction_table",
        "K0_bound",
    }
