import numpy as np
import pytest
from conftest import build_gaussian_field

from vortexlab.densities import GaussianMixture
from vortexlab.errors import (
    ConfigError,
    IntegrabilityError,
    SampleSizeError,
    StoppedRunError,
    SupportMismatchError,
)
from vortexlab.fields import GridField, shift_field
from vortexlab.infometrics import (
    EntropyTrace,
    FloorPolicy,
    KRBracket,
    dv_check,
    fisher_information,
    kr_distance,
    kr_trend_check,
    l1_distance,
    qv_density,
    qv_series,
    qv_term,
    relative_entropy,
    trace_violations,
    wasserstein1,
)
from vortexlab.mollifier import score_energy
from vortexlab.particles import ExitRecord, Trajectory


@pytest.fixture()
def shifted_pair():
    return build_gaussian_field(mean=(0.5, 0.0)), build_gaussian_field()


def test_entropy_of_shifted_gaussians(shifted_pair):
    f, g = shifted_pair
    assert relative_entropy(f, g) == pytest.approx(0.125, rel=1e-6)
    assert relative_entropy(g, g) == pytest.approx(0.0, abs=1e-14)


def test_fisher_information_of_shifted_gaussians(shifted_pair):
    f, g = shifted_pair
    assert fisher_information(f, g) == pytest.approx(0.25, rel=1e-6)


def test_gibbs_and_pinsker_hold_for_mixtures():
    f = GaussianMixture.gaussian([0.3, -0.2], [[0.8, 0.2], [0.2, 0.5]]).on_grid(10.0, 128)
    g = GaussianMixture.isotropic(1.2).on_grid(10.0, 128)
    H = relative_entropy(f, g)
    l1 = l1_distance(f, g)
    assert H > 0.0
    assert 0.0 < l1 <= 2.0
    assert l1 * l1 <= 2.0 * H


def test_support_mismatch_raises():
    f = build_gaussian_field()
    g = build_gaussian_field(mean=(6.0, 0.0), variance=0.1)
    with pytest.raises(SupportMismatchError, match="f holds mass"):
        relative_entropy(f, g)


def test_support_tolerance_is_configurable():
    f = build_gaussian_field()
    g = build_gaussian_field(mean=(6.0, 0.0), variance=0.1)
    loose = FloorPolicy(support_tolerance=2.0)
    assert np.isfinite(relative_entropy(f, g, loose))


def test_unresolved_tail_is_clipped_to_a_lower_bound():
    # g = N(0, 0.25 I) falls below its floor beyond r = 4, where f = N(0, 2 I)
    # still holds about 2% of its mass
    f = build_gaussian_field(variance=2.0)
    g = build_gaussian_field(variance=0.25)
    exact = 7.0 - np.log(8.0)
    H = relative_entropy(f, g)
    assert 0.0 < H < exact
    assert l1_distance(f, g) ** 2 <= 2.0 * H
    assert np.isfinite(fisher_information(f, g))


def test_grid_mismatch_raises():
    with pytest.raises(ConfigError, match="grid mismatch"):
        l1_distance(build_gaussian_field(M=64), build_gaussian_field(M=128))


def test_donsker_varadhan_holds():
    f, g = build_gaussian_field(mean=(0.5, 0.0)), build_gaussian_field()
    phi = GridField(np.sin(f.points()[..., 0]), f.L)
    report = dv_check(f, g, phi, eta=0.5)
    assert report.passed
    assert report.constants["lhs"] <= report.constants["rhs"]


def test_donsker_varadhan_rejects_huge_exponent():
    f = build_gaussian_field()
    phi = GridField(np.full_like(f.values, 1000.0), f.L)
    with pytest.raises(IntegrabilityError):
        dv_check(f, f, phi, eta=1.0)
    with pytest.raises(ConfigError):
        dv_check(f, f, phi, eta=0.0)


def test_donsker_varadhan_is_tight_at_the_log_ratio():
    f, g = build_gaussian_field(mean=(0.5, 0.0)), build_gaussian_field()
    # ln(f/g) for unit-variance Gaussians with means (0.5, 0) and 0
    phi = GridField(0.5 * f.points()[..., 0] - 0.125, f.L)
    report = dv_check(f, g, phi, eta=1.0)
    assert report.passed
    assert report.constants["lhs"] == pytest.approx(0.125, rel=1e-6)
    assert report.constants["rhs"] == pytest.approx(report.constants["lhs"], abs=1e-6)


@pytest.mark.parametrize("a", [(0.37, 0.21), (2.5, 0.0), (-1.7, 1.7)])
def test_entropy_is_unchanged_by_a_common_shift(shifted_pair, a):
    f, g = shifted_pair
    moved = relative_entropy(shift_field(f, a), shift_field(g, a))
    assert moved == pytest.approx(relative_entropy(f, g), abs=1e-6)


def test_kr_of_identical_measures_is_zero():
    x = np.random.default_rng(0).normal(scale=0.3, size=(200, 2))
    bracket = kr_distance(x, x, samples=200)
    assert bracket == KRBracket(0.0, 0.0)


def test_kr_bracket_for_translated_cloud():
    x = np.random.default_rng(1).normal(scale=0.3, size=(400, 2))
    bracket = kr_distance(x, x + np.array([0.3, 0.0]), samples=400)
    assert 0.2 < bracket.lower <= bracket.upper <= 0.3 + 1e-12


def test_kr_between_grid_and_particles():
    g = GaussianMixture.isotropic(0.5)
    x = g.sample(1000, np.random.default_rng(2))
    bracket = kr_distance(g.on_grid(6.0, 64), x, samples=512)
    assert 0.0 <= bracket.lower <= bracket.upper <= 2.0
    assert bracket.upper < 0.5


def test_kr_sample_limits():
    x = np.zeros((3, 2))
    with pytest.raises(SampleSizeError):
        kr_distance(x, x, samples=4096)
    with pytest.raises(SampleSizeError):
        kr_distance(x, x, samples=16, repeats=0)


def test_wasserstein_of_swapped_points():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert wasserstein1(a, a[::-1]) == 0.0


def test_qv_density_of_single_particle(spec):
    value = qv_density(np.zeros((1, 2)), spec, 16.0, 512)
    assert value == pytest.approx(0.5 * spec.N**spec.beta * score_energy(), rel=1e-6)


def test_qv_series_refuses_frames_after_stop(spec):
    traj = Trajectory(
        np.array([0.0, 0.1]), np.zeros((2, 1, 2)), np.zeros((2, 2)), dt=0.1, steps=1
    )
    with pytest.raises(StoppedRunError):
        qv_series(traj, spec, 8.0, 64, ExitRecord(0.05, 1.0, True))


def test_qv_series_accumulates_in_time(spec):
    traj = Trajectory(
        np.array([0.0, 0.1, 0.2]), np.zeros((3, 1, 2)), np.zeros((3, 2)), dt=0.1, steps=2
    )
    values, cumulative = qv_series(traj, spec, 8.0, 128)
    np.testing.assert_allclose(values, values[0])
    np.testing.assert_allclose(cumulative, [0.0, 0.1 * values[0], 0.2 * values[0]])
    assert qv_term(traj, spec, 8.0, 128) == pytest.approx(cumulative[-1])


def test_trace_round_trip_and_sup():
    trace = EntropyTrace()
    trace.append(0.0, 0.02, 0.5, 0.1, KRBracket(0.01, 0.05), 0.0)
    trace.append(0.1, 0.03, 0.4, 0.12, KRBracket(0.02, 0.06), 0.2)
    assert len(trace) == 2
    assert trace.sup_H == 0.03
    rebuilt = EntropyTrace.from_rows(trace.rows())
    assert rebuilt.rows() == trace.rows()
    assert trace_violations(trace) == []


def test_trace_violations_name_the_failure():
    trace = EntropyTrace()
    trace.append(0.5, 0.001, 0.1, 0.5, KRBracket(0.3, 0.1), 0.0)
    problems = trace_violations(trace)
    assert any("CKP" in p for p in problems)
    assert any("inverted" in p for p in problems)


def _trace(kr_hi: float, l1: float) -> EntropyTrace:
    trace = EntropyTrace()
    trace.append(0.0, 0.1, 0.1, l1, KRBracket(0.0, kr_hi), 0.0)
    return trace


def test_kr_trend_accepts_flat_ratio():
    traces = {n: [_trace(0.1 * n**-0.05, 0.0)] for n in (250, 500, 1000)}
    report = kr_trend_check(traces, beta=0.2)
    assert report.passed
    assert abs(report.constants["log_slope"]) < 1e-9


def test_kr_trend_flags_growth():
    traces = {n: [_trace(0.01 * n, 0.0)] for n in (250, 500, 1000)}
    report = kr_trend_check(traces, beta=0.2)
    assert not report.passed
    assert "grows" in report.violations[0]
