import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

import mc_oracle as mc
from ctseir.distributions import Exponential, Normal, PointMass
from ctseir.seir import EpidemicParams
from ctseir.tracing import (
    AlertProbabilities,
    ConfigurationError,
    NumericalError,
    TimelineSpec,
    alert_probabilities,
    notification_time,
    removal_rates,
    residual_moments,
)

DELAYS = np.round(np.arange(0, 121) * 0.05, 10)
modes = st.sampled_from(["exact", "normal-approx"])


def test_notification_time_exact_zero_delay():
    spec = TimelineSpec(Normal(3, 0.5), Normal(2, 0.5), PointMass(0.0))
    assert notification_time(spec).mean() == pytest.approx(1.0625, abs=1e-5)


def test_notification_time_normal_approx():
    spec = TimelineSpec.normal(3, 2, 2, mode="normal-approx")
    a = notification_time(spec)
    m, v = mc.residual_moments(2, 0.5)
    assert isinstance(a, Normal)
    assert a.mu == pytest.approx(m + 2, rel=1e-9)
    assert a.sigma**2 == pytest.approx(v + 0.25, rel=1e-6)
    assert v == pytest.approx(0.454, abs=1e-3)


@given(st.floats(0.0, 5.0))
def test_delay_shift_translates_notification(delta):
    base = notification_time(TimelineSpec.normal(3, 2, 1.0))
    moved = notification_time(TimelineSpec(Normal(3, 0.5), Normal(2, 0.5), Normal(1.0 + delta, 0.5)))
    assert moved.mean() - base.mean() == pytest.approx(delta, abs=1e-9)


def test_residual_moments_match_quadrature():
    m, v = residual_moments(Normal(2, 0.5))
    om, ov = mc.residual_moments(2, 0.5)
    assert m == pytest.approx(om, rel=1e-7)
    assert v == pytest.approx(ov, rel=1e-6)


@given(st.floats(0.0, 6.0), modes, st.floats(0.1, 1.0))
def test_partition_sums_to_one(mu_T, mode, sigma_T):
    p = alert_probabilities(TimelineSpec.normal(3, 2, mu_T, sigma_T=sigma_T, mode=mode))
    assert abs(p.p_E + p.p_I + p.p_R - 1.0) <= 1e-6


@given(st.floats(2.0, 6.0), st.floats(1.0, 4.0), st.floats(0.0, 4.0))
def test_partition_for_exponential_periods(mean_L, mean_C, mu_T):
    spec = TimelineSpec(Exponential(1 / mean_L), Exponential(1 / mean_C), Normal(mu_T, 0.5))
    p = alert_probabilities(spec)
    assert abs(p.p_E + p.p_I + p.p_R - 1.0) <= 1e-6


def test_point_mass_delay_partition():
    p = alert_probabilities(TimelineSpec.normal(3, 2, 0.0, sigma_T=0.0))
    assert abs(p.p_E + p.p_I + p.p_R - 1.0) <= 1e-6
    assert p.p_E == pytest.approx(0.98744, abs=1e-4)


@pytest.mark.parametrize("mode", ["exact", "normal-approx"])
def test_monotone_in_delay(mode):
    ps = [alert_probabilities(TimelineSpec.normal(3, 2, m, mode=mode)) for m in DELAYS]
    p_E = np.array([p.p_E for p in ps])
    p_R = np.array([p.p_R for p in ps])
    assert np.all(np.diff(p_E) <= 1e-12)
    assert np.all(np.diff(p_R) >= -1e-12)


def test_modes_agree_on_reference_timeline():
    for m in DELAYS:
        a = alert_probabilities(TimelineSpec.normal(3, 2, m))
        b = alert_probabilities(TimelineSpec.normal(3, 2, m, mode="normal-approx"))
        assert max(abs(a.p_E - b.p_E), abs(a.p_I - b.p_I), abs(a.p_R - b.p_R)) < 0.02


def test_normal_approx_two_day_delay():
    p = alert_probabilities(TimelineSpec.normal(3, 2, 2.0, mode="normal-approx"))
    m, v = mc.residual_moments(2, 0.5)
    expect = stats.norm.cdf(-(m + 2 - 3) / math.sqrt(v + 0.5))
    assert p.p_E == pytest.approx(expect, abs=1e-9)
    assert p.p_E == pytest.approx(0.47, abs=0.01)


@pytest.mark.parametrize("mode,mu_T", [("exact", 1.0), ("exact", 3.0), ("normal-approx", 1.0),
                                       ("normal-approx", 3.0)])
def test_against_monte_carlo(mode, mu_T):
    got = alert_probabilities(TimelineSpec.normal(3, 2, mu_T, mode=mode))
    est, n = mc.alert_probabilities(3, 0.5, 2, 0.5, mu_T, 0.5, mode, seed=2024)
    for e, g in zip(est, (got.p_E, got.p_I, got.p_R)):
        assert abs(e - g) < 3 * mc.standard_error(e, n)


def test_grid_refinement():
    for m in (0.0, 1.9, 4.5):
        spec = TimelineSpec.normal(3, 2, m)
        a, b = alert_probabilities(spec, 0.005), alert_probabilities(spec, 0.0025)
        assert max(abs(a.p_E - b.p_E), abs(a.p_I - b.p_I), abs(a.p_R - b.p_R)) < 1e-4


def test_very_long_delay_means_removed():
    p = alert_probabilities(TimelineSpec.normal(3, 2, 100.0))
    assert p.p_R > 1 - 1e-9
    r = removal_rates(p, 0.8, 1.0)
    assert r.theta < 1e-9 and r.psi < 1e-9


# --- removal rates ------------------------------------------------------------------

def test_removal_rates_examples():
    r = removal_rates(AlertProbabilities(0.4, 0.35, 0.25), 0.8, 1.0)
    assert r.theta == pytest.approx(0.32) and r.psi == pytest.approx(0.28)
    r = removal_rates(AlertProbabilities(1.0, 0.0, 0.0), 1.0, 2.5)
    assert (r.theta, r.psi) == (2.5, 0.0)
    r = removal_rates(AlertProbabilities(0.5, 0.3, 0.2), 0.0, 2.0)
    assert (r.theta, r.psi) == (0.0, 0.0)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 5))
def test_removal_rates_bounds(a, b, alpha, beta):
    p_E, p_I = a * (1 - b), a * b
    r = removal_rates(AlertProbabilities(p_E, p_I, 1 - p_E - p_I), alpha, beta)
    assert 0 <= r.theta <= alpha * beta and 0 <= r.psi <= alpha * beta
    assert r.theta + r.psi <= alpha * beta * (1 + 1e-12)
    assert r.theta + r.psi == pytest.approx((p_E + p_I) * alpha * beta, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("alpha,beta", [(-0.1, 1.0), (1.1, 1.0), (0.5, 0.0)])
def test_removal_rates_rejects(alpha, beta):
    with pytest.raises(ConfigurationError):
        removal_rates(AlertProbabilities(0.5, 0.3, 0.2), alpha, beta)


def test_probabilities_must_partition():
    with pytest.raises(NumericalError):
        AlertProbabilities(0.5, 0.5, 0.1)
    with pytest.raises(NumericalError):
        AlertProbabilities(-0.1, 0.6, 0.5)


# --- timeline validation --------------------------------------------------------------

def test_normal_mode_needs_normals():
    with pytest.raises(ConfigurationError):
        TimelineSpec(Normal(3, 0.5), Exponential(0.5), Normal(1, 0.5), mode="normal-approx")
    with pytest.raises(ConfigurationError):
        TimelineSpec(Normal(3, 0.5), Normal(2, 0.5), PointMass(0.0), mode="normal-approx")


def test_negative_latent_mass_rejected():
    with pytest.raises(ConfigurationError):
        TimelineSpec.normal(1.0, 2.0, 1.0)


def test_unknown_mode_rejected():
    with pytest.raises(ConfigurationError):
        TimelineSpec.normal(3, 2, 1, mode="fast")


def test_params_from_timeline():
    spec = TimelineSpec.normal(3, 2, 1.0)
    p = EpidemicParams.from_timeline(spec, beta=1.0, alpha=0.6)
    assert p.gamma * 2.0 == pytest.approx(1.0, abs=1e-9)
    assert p.epsilon * 3.0 == pytest.approx(1.0, abs=1e-9)
    probs = alert_probabilities(spec)
    assert p.theta == pytest.approx(probs.p_E * 0.6) and p.psi == pytest.approx(probs.p_I * 0.6)
