"""Controllability regions over (testing delay, app uptake) and alert-probability curves.

For a fixed timeline the alert probabilities do not depend on the uptake
alpha; only theta and psi do, and linearly.  Each delay value therefore
costs one probability evaluation, after which the whole alpha column is a
cheap closed-form evaluation of the C1 margin.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .distributions import DEFAULT_STEP
from .stability import condition_c1
from .tracing import (
    EXACT,
    NORMAL_APPROX,
    AlertProbabilities,
    ConfigurationError,
    TimelineSpec,
    alert_probabilities,
    normalize_mode,
)

BISECTION_TOL = 1e-4
PROBE_POINTS = 201


def default_delay_grid() -> np.ndarray:
    return np.round(np.arange(0, 121) * 0.05, 10)


def default_alpha_grid() -> np.ndarray:
    return np.round(np.arange(0, 201) * 0.005, 10)


class MonotonicityError(RuntimeError):
    """The C1 margin is not monotone in alpha, so bisection is invalid."""


@dataclass(frozen=True)
class Scenario:
    """One curve of a controllability figure.

    Exactly one of ``R0`` and ``beta`` is given; the other follows from
    ``beta = R0 * gamma``.
    """

    id: str
    epsilon_inv: float
    gamma_inv: float
    R0: float | None = None
    beta: float | None = None
    sigma_L: float = 0.5
    sigma_C: float = 0.5
    sigma_T: float = 0.5
    mode: str = NORMAL_APPROX
    step: float = DEFAULT_STEP

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        if (self.R0 is None) == (self.beta is None):
            raise ConfigurationError(f"scenario {self.id!r}: give exactly one of R0 and beta")
        for name in ("epsilon_inv", "gamma_inv", "sigma_L", "sigma_C"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"scenario {self.id!r}: {name} must be positive, got {v}")
        if not self.sigma_T >= 0:
            raise ConfigurationError(f"scenario {self.id!r}: sigma_T must be nonnegative")
        if self.R0 is None:
            object.__setattr__(self, "R0", self.beta * self.gamma_inv)
        else:
            object.__setattr__(self, "beta", self.R0 / self.gamma_inv)
        if not self.beta > 0:
            raise ConfigurationError(f"scenario {self.id!r}: derived beta must be positive")
        if abs(self.beta * self.gamma_inv - self.R0) > 1e-12 * max(1.0, self.R0):
            raise ConfigurationError(f"scenario {self.id!r}: R0 and beta inconsistent")

    @property
    def gamma(self) -> float:
        return 1.0 / self.gamma_inv

    @property
    def epsilon(self) -> float:
        return 1.0 / self.epsilon_inv

    def timeline(self, mu_T: float) -> TimelineSpec:
        """Timeline at testing delay ``mu_T``.

        In exact mode a zero delay is a point mass at zero; normal-approx
        mode keeps ``sigma_T`` because it needs a normal T.
        """
        if mu_T < 0:
            raise ConfigurationError(f"mu_T must be nonnegative, got {mu_T}")
        sigma_T = 0.0 if (self.mode == EXACT and mu_T == 0) else self.sigma_T
        if self.mode == NORMAL_APPROX and sigma_T == 0:
            raise ConfigurationError("normal-approx mode needs sigma_T > 0")
        return TimelineSpec.normal(self.epsilon_inv, self.gamma_inv, mu_T,
                                   self.sigma_L, self.sigma_C, sigma_T, self.mode)

    def probabilities(self, mu_T: float) -> AlertProbabilities:
        return _cached_probabilities(self, float(mu_T))

    def margin(self, alpha, mu_T: float, probs: AlertProbabilities | None = None):
        """C1 margin at uptake ``alpha`` (scalar or array)."""
        probs = probs or self.probabilities(mu_T)
        return c1_margin_for_uptake(alpha, self.beta, self.gamma, probs)

    def with_mode(self, mode: str) -> Scenario:
        return replace(self, mode=mode, beta=None)


@lru_cache(maxsize=4096)
def _cached_probabilities(scenario: Scenario, mu_T: float) -> AlertProbabilities:
    return alert_probabilities(scenario.timeline(mu_T), scenario.step)


def c1_margin_for_uptake(alpha, beta: float, gamma: float, probs: AlertProbabilities):
    """Margin with theta = p_E alpha beta and psi = p_I alpha beta."""
    alpha = np.asarray(alpha, dtype=float)
    out = np.array([condition_c1(a, beta, gamma, probs.p_E * a * beta, probs.p_I * a * beta)
                    for a in alpha.ravel()]).reshape(alpha.shape)
    return float(out) if out.ndim == 0 else out


def quadratic_alpha_min(R0: float, caught: float) -> float:
    """Boundary uptake from C1 with theta + psi = caught * alpha * beta.

    Multiplying the margin by alpha gives
    ``alpha^2 - a alpha - a / (caught R0) = 0`` with ``a = 1 - 1/R0``.
    """
    if R0 <= 1:
        return 0.0
    a = 1.0 - 1.0 / R0
    return 0.5 * (a + math.sqrt(a * a + 4.0 * a / (caught * R0)))


def bisect_min_alpha(margin: Callable[[float], float], tol: float = BISECTION_TOL,
                     probe_points: int = PROBE_POINTS) -> float | None:
    """Smallest alpha in [0, 1] with ``margin(alpha) > 0``, or None if there is none.

    The returned value is the upper end of the final bracket, so it is
    itself controlled and lies within ``tol`` of the boundary.  A probe
    grid guards against a margin that is not monotone in alpha.
    """
    probes = np.linspace(0.0, 1.0, probe_points)
    signs = np.array([margin(a) > 0 for a in probes])
    if np.any(signs[:-1] & ~signs[1:]):
        k = int(np.argmax(signs[:-1] & ~signs[1:]))
        raise MonotonicityError(f"margin turns negative again between alpha={probes[k]:.4g} "
                                f"and {probes[k + 1]:.4g}")
    if signs[0]:
        return 0.0
    if not signs[-1]:
        return None
    k = int(np.argmax(signs))
    lo, hi = float(probes[k - 1]), float(probes[k])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def min_alpha_for_control(scenario: Scenario, mu_T: float, tol: float = BISECTION_TOL) -> float | None:
    """Smallest controlling uptake at delay ``mu_T``; None when even alpha = 1 fails."""
    if scenario.R0 <= 1:
        return 0.0
    probs = scenario.probabilities(mu_T)
    return bisect_min_alpha(lambda a: scenario.margin(a, mu_T, probs), tol)


def _ordered_map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def boundary_curve(scenario: Scenario, delay_grid: Sequence[float] | None = None,
                   threads: int = 1, tol: float = BISECTION_TOL) -> list[tuple[float, float | None]]:
    delays = _check_grid(default_delay_grid() if delay_grid is None else delay_grid, "delay")
    mins = _ordered_map(lambda m: min_alpha_for_control(scenario, m, tol), delays, threads)
    return list(zip((float(m) for m in delays), mins))


def controllability_grid(scenario: Scenario, alpha_grid: Sequence[float] | None = None,
                         delay_grid: Sequence[float] | None = None, threads: int = 1) -> np.ndarray:
    """Boolean matrix indexed ``[delay, alpha]``: True where the margin is positive."""
    alphas = _check_grid(default_alpha_grid() if alpha_grid is None else alpha_grid, "alpha")
    delays = _check_grid(default_delay_grid() if delay_grid is None else delay_grid, "delay")
    if alphas[0] < 0 or alphas[-1] > 1:
        raise ConfigurationError("alpha grid must lie in [0, 1]")
    rows = _ordered_map(lambda m: scenario.margin(alphas, m) > 0, delays, threads)
    return np.array(rows, dtype=bool)


def alert_probability_curve(scenario: Scenario, delay_grid: Sequence[float] | None = None,
                            threads: int = 1) -> list[tuple[float, AlertProbabilities]]:
    delays = _check_grid(default_delay_grid() if delay_grid is None else delay_grid, "delay")
    probs = _ordered_map(scenario.probabilities, delays, threads)
    return list(zip((float(m) for m in delays), probs))


def _check_grid(grid, name: str) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ConfigurationError(f"{name} grid must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(g)) or np.any(np.diff(g) <= 0):
        raise ConfigurationError(f"{name} grid must be finite and strictly increasing")
    if name == "delay" and g[0] < 0:
        raise ConfigurationError("delay grid must be nonnegative")
    return g


# Figure presets. Latent period sd is 0.5 except for a 1-day mean, where 0.5
# would put 2.3% of the mass below zero; 0.3 keeps it under 1e-3.
def preset(name: str, mode: str = NORMAL_APPROX, sigma_T: float = 0.5) -> list[Scenario]:
    kw = dict(mode=mode, sigma_T=sigma_T)
    if name == "fig2":
        return [Scenario("fig2", epsilon_inv=3.0, gamma_inv=2.0, R0=2.0, **kw)]
    if name == "fig3":
        return [Scenario(f"fig3_eps_inv={e:g}", epsilon_inv=e, gamma_inv=2.0, R0=2.0,
                         sigma_L=0.3 if e == 1 else 0.5, **kw) for e in (1.0, 3.0, 5.0)]
    if name == "fig4":
        return [Scenario(f"fig4_gamma_inv={g:g}", epsilon_inv=3.0, gamma_inv=g, R0=2.0, **kw)
                for g in (2.0, 5.0, 8.0)]
    if name == "fig5":
        return [Scenario(f"fig5_R0={r:g}", epsilon_inv=3.0, gamma_inv=2.0, R0=r, **kw)
                for r in (2.0, 3.0, 4.0, 5.0, 6.0)]
    raise ConfigurationError(f"unknown preset {name!r}; expected fig2, fig3, fig4 or fig5")


PRESETS = ("fig2", "fig3", "fig4", "fig5")


def _fmt(v) -> str:
    return "" if v is None else f"{v:.9g}"


def _write_rows(path, header, rows, comments: dict | None) -> None:
    with open(Path(path), "w", newline="") as fh:
        for k, v in (comments or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_boundary_csv(path, curves: dict[str, list], comments: dict | None = None) -> None:
    rows = [[sid, _fmt(m), _fmt(a)] for sid, curve in curves.items() for m, a in curve]
    _write_rows(path, ["scenario_id", "mu_T", "alpha_min"], rows, comments)


def write_grid_csv(path, grids: dict[str, np.ndarray], alpha_grid, delay_grid,
                   comments: dict | None = None) -> None:
    rows = [[sid, _fmt(float(m)), _fmt(float(a)), int(g[i, j])]
            for sid, g in grids.items()
            for i, m in enumerate(delay_grid) for j, a in enumerate(alpha_grid)]
    _write_rows(path, ["scenario_id", "mu_T", "alpha", "controlled"], rows, comments)


def write_alert_csv(path, curve, comments: dict | None = None) -> None:
    rows = [[_fmt(m), _fmt(p.p_E), _fmt(p.p_I), _fmt(p.p_R)] for m, p in curve]
    _write_rows(path, ["mu_T", "p_E", "p_I", "p_R"], rows, comments)
