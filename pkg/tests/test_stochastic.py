import csv

import numpy as np
import pytest
from scipy.optimize import brentq

from ctseir.seir import COMPARTMENTS, EpidemicParams, initial_state, integrate
from ctseir.stochastic import (
    EXTINCT,
    OUTBREAK,
    integer_state,
    mean_peak_fraction,
    outbreak_frequency,
    run_ensemble,
    simulate,
)
from ctseir.sweep import preset
from ctseir.tracing import ConfigurationError

R0_2 = dict(beta=1.0, gamma=0.5, epsilon=1 / 3)


def _params_at_margin(target):
    s = preset("fig2")[0]
    probs = s.probabilities(0.0)
    alpha = brentq(lambda a: s.margin(a, 0.0, probs) - target, 0.05, 1.0, xtol=1e-12)
    return EpidemicParams.from_timeline(s.timeline(0.0), beta=s.beta, alpha=alpha, probs=probs)


def test_integer_state_rounds_tracked_share():
    x = integer_state(1000, 0.6, 10)
    np.testing.assert_array_equal(x, [396, 4, 0, 594, 6, 0, 0])
    assert x.sum() == 1000
    with pytest.raises(ConfigurationError):
        integer_state(1000.5, 0.6, 10)


def test_disease_free_state_is_absorbing():
    p = EpidemicParams(**R0_2, alpha=0.5, theta=0.2, psi=0.2)
    r = simulate(p, integer_state(100, 0.5, 0), seed=1, t_end=10.0, sample_dt=1.0)
    assert r.events == 0 and r.outcome == EXTINCT
    assert np.all(r.counts == r.counts[0])


def test_counts_conserved_and_nonnegative():
    p = EpidemicParams(**R0_2, alpha=0.7, theta=0.4, psi=0.2)
    init = integer_state(5000, 0.7, 50)
    for seed in range(5):
        r = simulate(p, init, seed, t_end=300.0, sample_dt=0.25)
        assert np.all(r.counts.sum(axis=1) == 5000)
        assert np.all(r.counts >= 0)
        assert r.final.sum() == 5000


def test_replay_is_bit_identical():
    p = EpidemicParams(**R0_2, alpha=0.5, theta=0.3, psi=0.1)
    init = integer_state(3000, 0.5, 30)
    a = simulate(p, init, 42, t_end=150.0, sample_dt=0.5)
    b = simulate(p, init, 42, t_end=150.0, sample_dt=0.5)
    assert np.array_equal(a.counts, b.counts) and a.events == b.events and a.end_time == b.end_time
    c = simulate(p, init, 43, t_end=150.0, sample_dt=0.5)
    assert not np.array_equal(a.counts, c.counts)


def test_threads_do_not_change_ensemble():
    p = EpidemicParams(**R0_2, alpha=0.3, theta=0.2, psi=0.05)
    init = integer_state(2000, 0.3, 20)
    one = run_ensemble(p, init, 12, seed0=7, t_end=100.0, sample_dt=1.0)
    many = run_ensemble(p, init, 12, seed0=7, t_end=100.0, sample_dt=1.0, threads=4)
    assert [r.seed for r in many] == list(range(7, 19))
    for a, b in zip(one, many):
        assert np.array_equal(a.counts, b.counts) and a.events == b.events


def test_isolation_cannot_exceed_tracked_infection():
    p = EpidemicParams(**R0_2, alpha=0.2, theta=0.5)
    with pytest.raises(ConfigurationError, match="theta"):
        simulate(p, integer_state(100, 0.2, 5), seed=0)


@pytest.mark.parametrize("kw", [dict(seed=-1), dict(seed=2**32), dict(seed=0, t_end=0.0),
                                dict(seed=0, sample_dt=1.0)])
def test_bad_arguments(kw):
    with pytest.raises(ConfigurationError):
        simulate(EpidemicParams(**R0_2), integer_state(100, 0.0, 5), **kw)


def test_bad_initial_state():
    with pytest.raises(ConfigurationError):
        simulate(EpidemicParams(**R0_2), np.array([10, -1, 0, 0, 0, 0, 0]), seed=0)
    with pytest.raises(ConfigurationError):
        simulate(EpidemicParams(**R0_2), np.array([10.5, 1, 0, 0, 0, 0, 0]), seed=0)


def test_trajectory_csv_has_seed_column(tmp_path):
    r = simulate(EpidemicParams(**R0_2), integer_state(500, 0.0, 5), seed=3, t_end=5.0, sample_dt=1.0)
    r.to_csv(tmp_path / "s.csv")
    rows = list(csv.reader((tmp_path / "s.csv").read_text().splitlines()))
    assert rows[0] == ["t", *COMPARTMENTS, "seed"]
    assert len(rows) == 7 and all(row[-1] == "3" for row in rows[1:])
    assert all(sum(int(float(v)) for v in row[1:-1]) == 500 for row in rows[1:])


# --- agreement with the deterministic model ----------------------------------------------

def test_subcritical_fades_out():
    p = EpidemicParams(beta=0.25, gamma=0.5, epsilon=1 / 3)
    runs = run_ensemble(p, integer_state(10**5, 0.0, 100), 20, seed0=0)
    assert all(r.outcome == EXTINCT for r in runs)
    assert max(r.attack_rate for r in runs) < (100 + 0.01 * 10**5) / 10**5


def test_large_population_peak():
    N = 10**6
    p = EpidemicParams(**R0_2, N=N)
    ode = integrate(p, initial_state(N, 0.0, 10), 400.0, thin=10).peak_infectious_fraction()
    assert mean_peak_fraction(p, 10, N, seed0=10, seed_exposed=10) == pytest.approx(ode, rel=0.05)


def test_peak_converges_with_population():
    p = EpidemicParams(**R0_2)
    errs, spreads = [], []
    for N in (10**3, 10**4, 10**5):
        ode = integrate(EpidemicParams(**R0_2, N=N), initial_state(N, 0.0, N // 100), 400.0,
                        thin=10).peak_infectious_fraction()
        peaks = np.array([r.peak_infectious_fraction
                          for r in run_ensemble(p, integer_state(N, 0.0, N // 100), 40, seed0=0)])
        errs.append(abs(peaks.mean() - ode) / ode)
        spreads.append(peaks.std())
    assert errs[0] > errs[1] > errs[2] and errs[2] < 0.02
    assert spreads[0] > spreads[1] > spreads[2]


def test_outbreak_frequency_follows_margin():
    freqs = [outbreak_frequency(_params_at_margin(m), 40, 10**4, seed0=0, seed_exposed=100)
             for m in (-0.2, 0.0, 0.2)]
    assert freqs[0] >= freqs[1] >= freqs[2]
    assert freqs[0] > 0.9 and freqs[2] < 0.1


def test_outcome_threshold():
    r = simulate(EpidemicParams(**R0_2), integer_state(10**4, 0.0, 100), seed=0)
    assert r.outcome == OUTBREAK and r.attack_rate > 0.05
    assert simulate(EpidemicParams(**R0_2), integer_state(10**4, 0.0, 100), seed=0,
                    threshold=0.99).outcome == EXTINCT
