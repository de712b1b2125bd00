"""Seven-compartment SEIR model with app-tracked and untracked populations.

Compartments are integrated as fractions of N with mass-action incidence
``beta * S * (I_U + I_T) / N``.  While ``S_U = (1 - alpha) N`` and
``S_T = alpha N`` this is exactly the linear system analysed for
controllability; away from that regime susceptible depletion bends the
epidemic curve.  Removal of tracked exposed people is driven by tracked
infectious people at rate ``theta``; it is scaled by ``S_T / (alpha N)`` so
that it never exceeds the flow of new tracked infections.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np

from .tracing import ConfigurationError, TimelineSpec, alert_probabilities, removal_rates

log = logging.getLogger(__name__)

COMPARTMENTS = ("S_U", "E_U", "I_U", "S_T", "E_T", "I_T", "R")
DEFAULT_DT = 0.01
CONSERVATION_TOL = 1e-9
UNDERSHOOT_TOL = 1e-9


class IntegrationError(RuntimeError):
    """Integration lost conservation or positivity; retry with a smaller dt."""


@dataclass(frozen=True)
class EpidemicParams:
    """Rates of the compartmental model (all per day) and the population size."""

    beta: float
    gamma: float
    epsilon: float
    alpha: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    N: float = 1.0

    def __post_init__(self):
        for name in ("beta", "gamma", "epsilon", "N"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {v}")
        for name in ("theta", "psi"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigurationError(f"{name} must be nonnegative and finite, got {v}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def R0(self) -> float:
        return self.beta / self.gamma

    @classmethod
    def from_timeline(cls, spec: TimelineSpec, beta: float, alpha: float, N: float = 1.0,
                      probs=None) -> EpidemicParams:
        """Derive gamma, epsilon from the mean periods and theta, psi from the alert probabilities."""
        mean_C, mean_L = spec.contagious.mean(), spec.latent.mean()
        if probs is None:
            probs = alert_probabilities(spec)
        rates = removal_rates(probs, alpha, beta)
        params = cls(beta=beta, gamma=1.0 / mean_C, epsilon=1.0 / mean_L, alpha=alpha,
                     theta=rates.theta, psi=rates.psi, N=N)
        if abs(params.gamma * mean_C - 1.0) > 1e-9 or abs(params.epsilon * mean_L - 1.0) > 1e-9:
            raise ConfigurationError("gamma/epsilon inconsistent with the timeline means")
        return params


@dataclass(frozen=True)
class CompartmentState:
    S_U: float = 0.0
    E_U: float = 0.0
    I_U: float = 0.0
    S_T: float = 0.0
    E_T: float = 0.0
    I_T: float = 0.0
    R: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, y) -> CompartmentState:
        return cls(*(float(v) for v in y))

    @property
    def total(self) -> float:
        return float(sum(astuple(self)))

    @property
    def infectious(self) -> float:
        return self.I_U + self.I_T

    def validate(self, N: float | None = None, rtol: float = CONSERVATION_TOL) -> None:
        y = self.as_array()
        if np.any(~np.isfinite(y)) or np.any(y < 0):
            raise ConfigurationError(f"compartments must be finite and nonnegative: {self}")
        if N is not None and abs(y.sum() - N) > rtol * N:
            raise ConfigurationError(f"compartments sum to {y.sum()}, expected N = {N}")


def initial_state(N: float, alpha: float, seed_exposed: float) -> CompartmentState:
    """Fully susceptible population with ``seed_exposed`` people split by app uptake."""
    if not N > 0:
        raise ConfigurationError(f"N must be positive, got {N}")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    if not 0 <= seed_exposed <= N:
        raise ConfigurationError(f"seed_exposed must lie in [0, N], got {seed_exposed}")
    susceptible = N - seed_exposed
    return CompartmentState(S_U=(1 - alpha) * susceptible, E_U=(1 - alpha) * seed_exposed,
                            S_T=alpha * susceptible, E_T=alpha * seed_exposed)


def _rhs(y: np.ndarray, p: EpidemicParams) -> np.ndarray:
    s_u, e_u, i_u, s_t, e_t, i_t, _ = y
    force = p.beta * (i_u + i_t)
    inf_u = force * s_u
    inf_t = force * s_t
    quarantine = p.theta * i_t * (s_t / p.alpha) if p.alpha > 0 else 0.0
    onset_u = p.epsilon * e_u
    onset_t = p.epsilon * e_t
    removal_u = p.gamma * i_u
    removal_t = (p.gamma + p.psi) * i_t
    return np.array([
        -inf_u,
        inf_u - onset_u,
        onset_u - removal_u,
        -inf_t,
        inf_t - quarantine - onset_t,
        onset_t - removal_t,
        removal_u + removal_t + quarantine,
    ])


def derivative(state: CompartmentState, params: EpidemicParams) -> CompartmentState:
    """Time derivative of every compartment (persons per day)."""
    y = state.as_array() / params.N
    return CompartmentState.from_array(_rhs(y, params) * params.N)


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), 7), persons
    clamped: int = 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.y[:, COMPARTMENTS.index(name)]

    @property
    def infectious(self) -> np.ndarray:
        return self["I_U"] + self["I_T"]

    def peak_infectious_fraction(self) -> float:
        return float(self.infectious.max() / self.y[0].sum())

    def state(self, k: int) -> CompartmentState:
        return CompartmentState.from_array(self.y[k])

    def to_csv(self, path, extra: dict | None = None, header_comments: dict | None = None) -> None:
        write_trajectory_csv(path, self.t, self.y, extra, header_comments)


def write_trajectory_csv(path, t, y, extra=None, header_comments=None) -> None:
    """Write ``t,S_U,...,R`` rows with 9 significant digits.

    ``extra`` maps additional column names to a constant value (e.g. a seed).
    """
    extra = extra or {}
    with open(Path(path), "w", newline="") as fh:
        for k, v in (header_comments or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *COMPARTMENTS, *extra])
        for ti, row in zip(t, y):
            w.writerow([f"{ti:.9g}", *(f"{v:.9g}" for v in row), *extra.values()])


def integrate(params: EpidemicParams, init: CompartmentState, t_end: float,
              dt: float = DEFAULT_DT, thin: int = 1) -> Trajectory:
    """Classical fixed-step RK4 from ``init`` to ``t_end``.

    Every ``thin``-th step is recorded.  Raises IntegrationError if the
    compartment total drifts by more than 1e-9 relative or a compartment
    undershoots below -1e-9 N; smaller undershoots are clamped to zero.
    """
    if not (dt > 0 and t_end > 0):
        raise ConfigurationError(f"need dt > 0 and t_end > 0, got dt={dt}, t_end={t_end}")
    if thin < 1:
        raise ConfigurationError("thin must be >= 1")
    init.validate(params.N, rtol=1e-6)
    N = params.N
    n_steps = int(np.ceil(t_end / dt - 1e-9))
    y = init.as_array() / N
    total0 = y.sum()
    ts, ys = [0.0], [y * N]
    clamped = 0
    for k in range(1, n_steps + 1):
        h = min(dt, t_end - (k - 1) * dt)
        k1 = _rhs(y, params)
        k2 = _rhs(y + 0.5 * h * k1, params)
        k3 = _rhs(y + 0.5 * h * k2, params)
        k4 = _rhs(y + h * k3, params)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        low = y < 0
        if low.any():
            if y.min() < -UNDERSHOOT_TOL:
                raise IntegrationError(f"compartment fell to {y.min() * N:.3g} persons at t={k * dt:.6g}; "
                                       f"reduce dt (now {dt})")
            clamped += int(low.sum())
            y = np.where(low, 0.0, y)
        if abs(y.sum() - total0) > CONSERVATION_TOL * total0:
            raise IntegrationError(f"population drifted by {abs(y.sum() - total0) * N:.3g} at "
                                   f"t={k * dt:.6g}; reduce dt (now {dt})")
        if k % thin == 0 or k == n_steps:
            ts.append(min(k * dt, t_end))
            ys.append(y * N)
    if clamped:
        log.info("clamped %d rounding undershoots to zero", clamped)
    return Trajectory(np.array(ts), np.array(ys), clamped)

