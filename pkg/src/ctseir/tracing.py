"""Notification timeline: when does an app alert reach a traced contact?

A contact is infected at a random moment of the infector's asymptomatic
contagious window, so the alert arrives after the residual of that window
plus the testing delay.  Comparing that arrival time with the infectee's own
latent and contagious periods splits alerts into three outcomes: caught while
exposed, while infectious, or after removal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .distributions import (
    DEFAULT_STEP,
    NEGATIVE_MASS_LIMIT,
    DurationDistribution,
    GridDistribution,
    Normal,
    PointMass,
    diff_of,
    residual,
    sum_of,
)

EXACT = "exact"
NORMAL_APPROX = "normal-approx"
MODES = (EXACT, NORMAL_APPROX)

SUM_TOL = 1e-6


class ConfigurationError(ValueError):
    """Invalid model configuration."""


class NumericalError(ArithmeticError):
    """A numerical procedure produced an inconsistent result."""


def normalize_mode(mode: str) -> str:
    aliases = {"exact": EXACT, "exact-numerical": EXACT, "normal-approx": NORMAL_APPROX,
               "normal-approximation": NORMAL_APPROX, "normal": NORMAL_APPROX}
    try:
        return aliases[mode]
    except KeyError:
        raise ConfigurationError(f"unknown mode {mode!r}; expected one of {MODES}") from None


@dataclass(frozen=True)
class TimelineSpec:
    """Latent period, asymptomatic contagious period and testing delay."""

    latent: DurationDistribution
    contagious: DurationDistribution
    testing: DurationDistribution
    mode: str = EXACT

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        for name in ("latent", "contagious"):
            d = getattr(self, name)
            if not d.mean() > 0:
                raise ConfigurationError(f"{name} period must have a positive mean")
            if d.negative_mass() > NEGATIVE_MASS_LIMIT:
                raise ConfigurationError(
                    f"{name} period puts {d.negative_mass():.3g} of its mass below zero"
                )
        if self.mode == NORMAL_APPROX:
            bad = [n for n in ("latent", "contagious", "testing") if not isinstance(getattr(self, n), Normal)]
            if bad:
                raise ConfigurationError(f"normal-approx mode needs normal {', '.join(bad)}")

    @classmethod
    def normal(cls, mu_L, mu_C, mu_T, sigma_L=0.5, sigma_C=0.5, sigma_T=0.5, mode=EXACT) -> TimelineSpec:
        """All-normal timeline; ``sigma_T == 0`` gives a deterministic delay."""
        testing = PointMass(mu_T) if sigma_T == 0 else Normal(mu_T, sigma_T)
        return cls(Normal(mu_L, sigma_L), Normal(mu_C, sigma_C), testing, mode)


@dataclass(frozen=True)
class AlertProbabilities:
    p_E: float
    p_I: float
    p_R: float

    def __post_init__(self):
        for name in ("p_E", "p_I", "p_R"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise NumericalError(f"{name} = {v!r} outside [0, 1]")
        total = self.p_E + self.p_I + self.p_R
        if abs(total - 1.0) > SUM_TOL:
            raise NumericalError(
                f"alert probabilities sum to {total!r} (p_E={self.p_E}, p_I={self.p_I}, p_R={self.p_R})"
            )

    @property
    def caught_before_removal(self) -> float:
        return self.p_E + self.p_I


@dataclass(frozen=True)
class DerivedRates:
    theta: float
    psi: float


def residual_moments(contagious: DurationDistribution, step: float = DEFAULT_STEP) -> tuple[float, float]:
    r = residual(contagious, step)
    return r.mean(), r.var()


def notification_time(spec: TimelineSpec, step: float = DEFAULT_STEP) -> DurationDistribution:
    """Delay between the at-risk contact and the app notification.

    Exact mode convolves the residual contagious period with the testing
    delay.  Normal-approx mode replaces the residual by a normal with the
    same mean and variance, so the result stays closed-form.
    """
    if spec.mode == NORMAL_APPROX:
        m, v = residual_moments(spec.contagious, step)
        t = spec.testing
        return Normal(m + t.mu, math.sqrt(v + t.sigma**2))
    return sum_of(residual(spec.contagious, step), spec.testing, step)


def _expect(w: DurationDistribution, g, lo: float = -math.inf, hi: float = math.inf) -> float:
    """Integral of density_W(u) * g(u) over [lo, hi]."""
    if isinstance(w, GridDistribution):
        return w.expect(g, lo, hi)
    if isinstance(w, Normal):
        lo, hi = max(lo, w.mu - 12.0 * w.sigma), min(hi, w.mu + 12.0 * w.sigma)
        if not hi > lo:
            return 0.0
        val, _ = integrate.quad(lambda u: float(w.pdf(u) * g(u)), lo, hi, epsabs=1e-11, epsrel=1e-10, limit=200)
        return val
    if isinstance(w, PointMass):
        return float(g(w.value)) if lo <= w.value <= hi else 0.0
    raise NumericalError(f"unsupported distribution kind {w.kind!r} for quadrature")


def alert_probabilities(spec: TimelineSpec, step: float = DEFAULT_STEP) -> AlertProbabilities:
    """Probabilities that an alert finds the contact exposed, infectious or removed.

    With W = A - L (notification time minus the infectee's latent period):
    p_E = P(W < 0), p_I = P(0 < W < C) by quadrature, p_R = P(W - C > 0).
    The three are computed independently and must sum to one.

    The infectee's contagious period enters as the duration max(C, 0).  For
    a normal C this removes the band C < W < 0 from P(W - C > 0); that band
    is already counted in p_E and is about 1e-6 for the default timeline.
    """
    w = diff_of(notification_time(spec, step), spec.latent, step)
    c = spec.contagious
    p_E = float(w.cdf(0.0))
    p_I = _expect(w, c.sf, lo=0.0)
    p_R = float(diff_of(w, c, step).sf(0.0))
    if c.negative_mass() > 0:
        p_R -= _expect(w, c.cdf, hi=0.0)
    clip = lambda v: min(max(v, 0.0), 1.0)  # noqa: E731
    return AlertProbabilities(clip(p_E), clip(p_I), clip(p_R))


def removal_rates(probs: AlertProbabilities, alpha: float, beta: float) -> DerivedRates:
    """Isolation rates of tracked exposed (theta) and tracked infectious (psi)."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    if not beta > 0:
        raise ConfigurationError(f"beta must be positive, got {beta}")
    tracked = alpha * beta
    return DerivedRates(theta=probs.p_E * tracked, psi=probs.p_I * tracked)
