"""Exact stochastic simulation of the seven-compartment model.

Each ODE flux becomes a Markov event with the same rate.  Tracked
susceptibles infected by a tracked infector are split two ways: with rate
``theta I_T S_T / (alpha N)`` the contact is isolated before becoming
contagious (S_T -> R directly), otherwise it enters E_T.  Taking the
isolation event at infection time keeps every rate nonnegative and matches
the ODE means term by term; only the moment the person is counted as
removed differs, which no other rate depends on.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .seir import COMPARTMENTS, EpidemicParams, initial_state, write_trajectory_csv
from .tracing import ConfigurationError

EXTINCT = "extinct"
OUTBREAK = "outbreak"
OUTBREAK_THRESHOLD = 0.05

S_U, E_U, I_U, S_T, E_T, I_T, R = range(7)

# (source, target) of each event, in the order the kernel computes rates.
_EVENTS = np.array([
    [S_U, E_U],  # infection of untracked
    [S_T, E_T],  # infection of tracked, not isolated in time
    [S_T, R],    # tracked contact isolated while exposed
    [E_U, I_U],
    [E_T, I_T],
    [I_U, R],
    [I_T, R],
], dtype=np.int64)


@numba.njit(cache=True, nogil=True)
def _gillespie(state, beta, gamma, epsilon, alpha, theta, psi, t_end, sample_times, seed):
    np.random.seed(seed)
    x = state.copy()
    n = x.sum()
    samples = np.empty((sample_times.size, 7), dtype=np.int64)
    k = 0
    t = 0.0
    peak = x[I_U] + x[I_T]
    events = 0
    quarantine = theta / alpha if alpha > 0 else 0.0
    rates = np.zeros(7)
    while True:
        infectious = x[I_U] + x[I_T]
        if x[E_U] + x[E_T] + infectious == 0:
            break
        rates[0] = beta * x[S_U] * infectious / n
        rates[1] = (beta * x[I_U] + (beta - quarantine) * x[I_T]) * x[S_T] / n
        rates[2] = quarantine * x[I_T] * x[S_T] / n
        rates[3] = epsilon * x[E_U]
        rates[4] = epsilon * x[E_T]
        rates[5] = gamma * x[I_U]
        rates[6] = (gamma + psi) * x[I_T]
        total = rates.sum()
        t_next = t - math.log(1.0 - np.random.random()) / total
        while k < sample_times.size and sample_times[k] < t_next and sample_times[k] <= t_end:
            samples[k] = x
            k += 1
        if t_next > t_end:
            t = t_end
            break
        t = t_next
        u = np.random.random() * total
        j = 0
        acc = rates[0]
        while acc <= u and j < 6:
            j += 1
            acc += rates[j]
        while rates[j] == 0.0:  # rounding at the top of the cumulative sum
            j -= 1
        x[_EVENTS[j, 0]] -= 1
        x[_EVENTS[j, 1]] += 1
        events += 1
        infectious = x[I_U] + x[I_T]
        if infectious > peak:
            peak = infectious
    while k < sample_times.size:
        samples[k] = x
        k += 1
    return samples, x, t, peak, events


@dataclass(frozen=True, eq=False)
class StochasticRun:
    seed: int
    N: int
    times: np.ndarray
    counts: np.ndarray  # shape (len(times), 7), integer persons
    final: np.ndarray
    end_time: float
    peak_infectious: int
    events: int
    threshold: float = OUTBREAK_THRESHOLD

    @property
    def attack_rate(self) -> float:
        """Fraction of the population ever infected (all who left S)."""
        return (self.N - self.final[S_U] - self.final[S_T]) / self.N

    @property
    def outcome(self) -> str:
        return OUTBREAK if self.attack_rate > self.threshold else EXTINCT

    @property
    def peak_infectious_fraction(self) -> float:
        return self.peak_infectious / self.N

    def to_csv(self, path, header_comments: dict | None = None) -> None:
        write_trajectory_csv(path, self.times, self.counts, {"seed": self.seed}, header_comments)


def integer_state(N: int, alpha: float, seed_exposed: int) -> np.ndarray:
    """Integer version of ``initial_state`` (rounded tracked shares)."""
    if int(N) != N or int(seed_exposed) != seed_exposed:
        raise ConfigurationError("N and seed_exposed must be integers for stochastic runs")
    initial_state(N, alpha, seed_exposed)  # validation
    N, s = int(N), int(seed_exposed)
    e_t = int(round(alpha * s))
    s_t = int(round(alpha * (N - s)))
    return np.array([N - s - s_t, s - e_t, 0, s_t, e_t, 0, 0], dtype=np.int64)


def _check(params: EpidemicParams, init: np.ndarray) -> np.ndarray:
    init = np.asarray(init)
    if init.shape != (7,) or np.any(init < 0) or not np.all(np.equal(np.mod(init, 1), 0)):
        raise ConfigurationError(f"stochastic initial state must be 7 nonnegative integers, got {init}")
    if init.sum() < 1:
        raise ConfigurationError("population must contain at least one person")
    if params.theta > params.alpha * params.beta * (1 + 1e-12):
        raise ConfigurationError(f"theta={params.theta} exceeds alpha*beta={params.alpha * params.beta}; "
                                 "isolation cannot outpace tracked infections")
    return init.astype(np.int64)


def simulate(params: EpidemicParams, init, seed: int, t_end: float = math.inf,
             sample_dt: float | None = None, threshold: float = OUTBREAK_THRESHOLD) -> StochasticRun:
    """One exact stochastic trajectory.

    Sampled states are recorded every ``sample_dt`` days up to ``t_end``
    (only t = 0 when ``sample_dt`` is None).  The run stops early once no
    exposed or infectious person remains; later samples repeat that state.
    The population size is taken from ``init``; ``params.N`` is ignored.
    """
    x0 = _check(params, init)
    if not 0 <= seed < 2**32:
        raise ConfigurationError(f"seed must lie in [0, 2**32), got {seed}")
    if not t_end > 0:
        raise ConfigurationError(f"t_end must be positive, got {t_end}")
    if sample_dt is None:
        times = np.zeros(1)
    else:
        if not (sample_dt > 0 and math.isfinite(t_end)):
            raise ConfigurationError("sampling needs sample_dt > 0 and a finite t_end")
        times = np.arange(int(math.floor(t_end / sample_dt + 1e-9)) + 1) * sample_dt
    p = params
    samples, final, t_stop, peak, events = _gillespie(
        x0, p.beta, p.gamma, p.epsilon, p.alpha, p.theta, p.psi, float(t_end), times, np.uint32(seed))
    return StochasticRun(int(seed), int(x0.sum()), times, samples, final, float(t_stop), int(peak),
                         int(events), threshold)


def run_ensemble(params: EpidemicParams, init, runs: int, seed0: int, t_end: float = math.inf,
                 sample_dt: float | None = None, threads: int = 1,
                 threshold: float = OUTBREAK_THRESHOLD) -> list[StochasticRun]:
    """``runs`` trajectories with seeds ``seed0, seed0 + 1, ...`` in seed order."""
    if runs < 1:
        raise ConfigurationError("runs must be >= 1")
    go = lambda s: simulate(params, init, s, t_end, sample_dt, threshold)  # noqa: E731
    seeds = range(seed0, seed0 + runs)
    if threads <= 1:
        return [go(s) for s in seeds]
    go(seed0)  # compile once before threads race to the cache
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(go, seeds))


def outbreak_frequency(params: EpidemicParams, runs: int, N: int, seed0: int, seed_exposed: int = 100,
                       threshold: float = OUTBREAK_THRESHOLD, threads: int = 1) -> float:
    """Fraction of runs whose final attack rate exceeds ``threshold``."""
    init = integer_state(N, params.alpha, seed_exposed)
    ensemble = run_ensemble(params, init, runs, seed0, threads=threads, threshold=threshold)
    return sum(r.outcome == OUTBREAK for r in ensemble) / runs


def mean_peak_fraction(params: EpidemicParams, runs: int, N: int, seed0: int, seed_exposed: int = 100,
                       threads: int = 1) -> float:
    init = integer_state(N, params.alpha, seed_exposed)
    ensemble = run_ensemble(params, init, runs, seed0, threads=threads)
    return float(np.mean([r.peak_infectious_fraction for r in ensemble]))


__all__ = ["COMPARTMENTS", "EXTINCT", "OUTBREAK", "StochasticRun", "integer_state", "mean_peak_fraction",
           "outbreak_frequency", "run_ensemble", "simulate"]
