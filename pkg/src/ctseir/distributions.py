"""Duration distributions and the algebra the notification timeline needs.

Four kinds are supported: closed-form normals, exponentials, point masses
and densities tabulated on a uniform lattice.  Closed forms are kept while
an exact identity exists (normal sums, exponential memorylessness); every
other combination falls back to the lattice, where sums are computed by
trapezoid-weighted discrete convolution.

Lattice densities live on ``x_i = shift + (start + i) * step``.  Keeping the
integer ``start`` separate from the float ``shift`` makes sums and
differences of lattice densities land exactly on the lattice again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import ClassVar

import numpy as np
from scipy import integrate, signal
from scipy.special import ndtr

DEFAULT_STEP = 0.005
NORMAL_SPAN = 8.0
EXPONENTIAL_TAIL = 1e-8
MASS_TOL = 1e-6
NEGATIVE_MASS_LIMIT = 1e-3

# mass dropped from each tail when trimming a convolution result
_TRIM_MASS = 1e-15


class InvalidDistributionError(ValueError):
    """A distribution cannot be built, or an operation is undefined for it."""


class DurationDistribution:
    """Common interface of every duration distribution."""

    kind: ClassVar[str] = ""

    def pdf(self, t):
        raise NotImplementedError

    def cdf(self, t):
        raise NotImplementedError

    def sf(self, t):
        return 1.0 - self.cdf(t)

    def mean(self) -> float:
        raise NotImplementedError

    def var(self) -> float:
        raise NotImplementedError

    def std(self) -> float:
        return math.sqrt(max(self.var(), 0.0))

    def upper(self) -> float:
        """Right end of the (effective) support."""
        raise NotImplementedError

    def negative_mass(self) -> float:
        """P(X < 0), reported as a diagnostic for duration roles."""
        return float(self.cdf(0.0))

    def sample(self, size, seed=None) -> np.ndarray:
        raise NotImplementedError

    def to_grid(self, step: float = DEFAULT_STEP) -> GridDistribution:
        raise NotImplementedError

    def shifted(self, offset: float) -> DurationDistribution:
        if offset == 0.0:
            return self
        return self.to_grid().shifted(offset)

    def negated(self) -> DurationDistribution:
        return self.to_grid().negated()


@dataclass(frozen=True)
class Normal(DurationDistribution):
    """Normal duration, evaluated on the whole real line (no truncation at zero)."""

    mu: float
    sigma: float
    kind: ClassVar[str] = "closed-form-normal"

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or self.sigma <= 0:
            raise InvalidDistributionError(f"normal needs finite mu and sigma > 0, got ({self.mu}, {self.sigma})")

    def pdf(self, t):
        z = (np.asarray(t, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def cdf(self, t):
        return ndtr((np.asarray(t, dtype=float) - self.mu) / self.sigma)

    def sf(self, t):
        return ndtr((self.mu - np.asarray(t, dtype=float)) / self.sigma)

    def mean(self) -> float:
        return self.mu

    def var(self) -> float:
        return self.sigma**2

    def upper(self) -> float:
        return self.mu + NORMAL_SPAN * self.sigma

    def raw_moment(self, k: int) -> float:
        """E[X^k] for k = 1, 2, 3."""
        m, s2 = self.mu, self.sigma**2
        return {1: m, 2: m * m + s2, 3: m**3 + 3 * m * s2}[k]

    def sample(self, size, seed=None) -> np.ndarray:
        return np.random.default_rng(seed).normal(self.mu, self.sigma, size)

    def to_grid(self, step: float = DEFAULT_STEP) -> GridDistribution:
        lo = math.floor((self.mu - NORMAL_SPAN * self.sigma) / step)
        hi = math.ceil((self.mu + NORMAL_SPAN * self.sigma) / step)
        x = np.arange(lo, hi + 1) * step
        return GridDistribution.build(lo, step, self.pdf(x))

    def shifted(self, offset: float) -> Normal:
        return self if offset == 0.0 else Normal(self.mu + offset, self.sigma)

    def negated(self) -> Normal:
        return Normal(-self.mu, self.sigma)


@dataclass(frozen=True)
class Exponential(DurationDistribution):
    rate: float
    kind: ClassVar[str] = "exponential"

    def __post_init__(self):
        if not math.isfinite(self.rate) or self.rate <= 0:
            raise InvalidDistributionError(f"exponential rate must be > 0, got {self.rate}")

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)), 0.0)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, -np.expm1(-self.rate * np.maximum(t, 0.0)), 0.0)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, np.exp(-self.rate * np.maximum(t, 0.0)), 1.0)

    def mean(self) -> float:
        return 1.0 / self.rate

    def var(self) -> float:
        return 1.0 / self.rate**2

    def upper(self) -> float:
        return -math.log(EXPONENTIAL_TAIL) / self.rate

    def negative_mass(self) -> float:
        return 0.0

    def sample(self, size, seed=None) -> np.ndarray:
        return np.random.default_rng(seed).exponential(1.0 / self.rate, size)

    def to_grid(self, step: float = DEFAULT_STEP) -> GridDistribution:
        n = math.ceil(self.upper() / step)
        x = np.arange(n + 1) * step
        return GridDistribution.build(0, step, self.rate * np.exp(-self.rate * x))


@dataclass(frozen=True)
class PointMass(DurationDistribution):
    value: float
    kind: ClassVar[str] = "point-mass"

    def pdf(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def cdf(self, t):
        return (np.asarray(t, dtype=float) >= self.value).astype(float)

    def sf(self, t):
        return (np.asarray(t, dtype=float) < self.value).astype(float)

    def mean(self) -> float:
        return self.value

    def var(self) -> float:
        return 0.0

    def upper(self) -> float:
        return self.value

    def negative_mass(self) -> float:
        return float(self.value < 0)

    def sample(self, size, seed=None) -> np.ndarray:
        return np.full(size, self.value, dtype=float)

    def to_grid(self, step: float = DEFAULT_STEP) -> GridDistribution:
        raise InvalidDistributionError("a point mass has no density; combine it by shifting instead")

    def shifted(self, offset: float) -> PointMass:
        return PointMass(self.value + offset)

    def negated(self) -> PointMass:
        return PointMass(-self.value)


@dataclass(frozen=True, eq=False)
class GridDistribution(DurationDistribution):
    """Density tabulated at the nodes ``shift + (start + i) * step``.

    Node values at the two ends are one-sided limits, so a density with a
    jump at a support end (exponential, uniform, residual) is represented
    without smearing.  Node CDF values and moments use Simpson's rule;
    inside a cell the CDF follows the linear-interpolant shape.
    """

    start: int
    step: float
    density: np.ndarray
    shift: float = 0.0
    kind: ClassVar[str] = "numerical-grid"
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        if d.ndim != 1 or d.size < 2:
            raise InvalidDistributionError("grid density needs at least two nodes")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InvalidDistributionError("grid density must be finite and nonnegative")
        if not self.step > 0:
            raise InvalidDistributionError(f"grid step must be positive, got {self.step}")
        d.setflags(write=False)
        object.__setattr__(self, "density", d)
        cum = _cumulative_mass(d, self.step)
        if not abs(cum[-1] - 1.0) <= MASS_TOL:
            raise InvalidDistributionError(f"grid density integrates to {cum[-1]!r}, not 1")
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def build(cls, start: int, step: float, values, shift: float = 0.0, trim: bool = True) -> GridDistribution:
        """Clip, optionally trim negligible tails, and normalise raw node values."""
        d = np.clip(np.asarray(values, dtype=float), 0.0, None)
        if d.size < 2 or not np.any(d > 0):
            raise InvalidDistributionError("empty support")
        if trim:
            cell = 0.5 * step * (d[1:] + d[:-1])
            total = cell.sum()
            left = np.cumsum(cell)
            right = np.cumsum(cell[::-1])
            i0 = int(np.searchsorted(left, _TRIM_MASS * total, side="right"))
            i1 = d.size - 1 - int(np.searchsorted(right, _TRIM_MASS * total, side="right"))
            if i1 - i0 >= 1:
                d = d[i0 : i1 + 1]
                start += i0
        mass = _cumulative_mass(d, step)[-1]
        if not mass > 0:
            raise InvalidDistributionError("empty support")
        return cls(int(start), float(step), d / mass, float(shift))

    @classmethod
    def from_pdf(cls, pdf, lo: float, hi: float, step: float = DEFAULT_STEP) -> GridDistribution:
        """Tabulate ``pdf`` on the lattice nodes covering [lo, hi]."""
        i0, i1 = math.floor(lo / step + 1e-9), math.ceil(hi / step - 1e-9)
        x = np.arange(i0, i1 + 1) * step
        return cls.build(i0, step, pdf(x), trim=False)

    @property
    def x(self) -> np.ndarray:
        return self.shift + (self.start + np.arange(self.density.size)) * self.step

    @property
    def lower(self) -> float:
        return self.shift + self.start * self.step

    def upper(self) -> float:
        return self.shift + (self.start + self.density.size - 1) * self.step

    def pdf(self, t):
        return np.interp(np.asarray(t, dtype=float), self.x, self.density, left=0.0, right=0.0)

    def cdf(self, t):
        t0 = np.asarray(t, dtype=float)
        t = np.atleast_1d(t0)
        d, h = self.density, self.step
        u = (t - self.lower) / h
        i = np.clip(np.floor(u).astype(np.int64), 0, d.size - 2)
        tau = np.clip(t - (self.lower + i * h), 0.0, h)
        # piecewise-linear shape inside the cell, rescaled to the Simpson cell mass
        lin = tau * d[i] + tau * tau * (d[i + 1] - d[i]) / (2.0 * h)
        cell_lin = 0.5 * h * (d[i] + d[i + 1])
        cell = self._cum[i + 1] - self._cum[i]
        frac = np.divide(lin, cell_lin, out=tau / h, where=cell_lin > 0)
        out = self._cum[i] + cell * frac
        out = np.where(u < 0, 0.0, np.where(u >= d.size - 1, self._cum[-1], out))
        return np.minimum(out, 1.0).reshape(t0.shape)

    def _moment_about(self, c: float, k: int) -> float:
        return float(integrate.simpson((self.x - c) ** k * self.density, dx=self.step))

    def mean(self) -> float:
        return self.lower + self._moment_about(self.lower, 1)

    def var(self) -> float:
        return self._moment_about(self.mean(), 2)

    def mass(self) -> float:
        return float(self._cum[-1])

    def negative_mass(self) -> float:
        return float(self.cdf(0.0))

    def sample(self, size, seed=None) -> np.ndarray:
        u = np.random.default_rng(seed).random(size)
        return np.interp(u * self._cum[-1], self._cum, self.x)

    def to_grid(self, step: float = DEFAULT_STEP) -> GridDistribution:
        return self

    def shifted(self, offset: float) -> GridDistribution:
        return self if offset == 0.0 else replace(self, shift=self.shift + offset)

    def negated(self) -> GridDistribution:
        n = self.density.size
        return GridDistribution(-(self.start + n - 1), self.step, self.density[::-1].copy(), -self.shift)

    def expect(self, g, lo: float = -math.inf, hi: float = math.inf) -> float:
        """Integral of pdf(x) * g(x) over [lo, hi]: Simpson on interior nodes, trapezoid on partial end cells."""
        x = self.x
        lo, hi = max(lo, x[0]), min(hi, x[-1])
        if not hi > lo:
            return 0.0
        eps = 1e-9 * self.step
        i = int(np.searchsorted(x, lo - eps, side="left"))
        j = int(np.searchsorted(x, hi + eps, side="right")) - 1
        f = lambda t: float(self.pdf(t)) * float(g(t))  # noqa: E731
        if j < i:
            return 0.5 * (hi - lo) * (f(lo) + f(hi))
        total = 0.0
        if x[i] - lo > eps:
            total += 0.5 * (x[i] - lo) * (f(lo) + f(x[i]))
        if hi - x[j] > eps:
            total += 0.5 * (hi - x[j]) * (f(x[j]) + f(hi))
        if j > i:
            total += float(integrate.simpson(self.density[i : j + 1] * g(x[i : j + 1]), dx=self.step))
        return total


def _cumulative_mass(d: np.ndarray, step: float) -> np.ndarray:
    """Cumulative Simpson integral at the nodes, forced nondecreasing."""
    if d.size < 3:
        cum = np.concatenate(([0.0], np.cumsum(0.5 * step * (d[1:] + d[:-1]))))
    else:
        cum = integrate.cumulative_simpson(d, dx=step, initial=0.0)
    return np.maximum.accumulate(np.maximum(cum, 0.0))


def uniform(lo: float, hi: float, step: float = DEFAULT_STEP) -> GridDistribution:
    """Uniform density on [lo, hi]; both ends must sit on the lattice."""
    if not hi > lo:
        raise InvalidDistributionError(f"uniform needs lo < hi, got [{lo}, {hi}]")
    i0, i1 = round(lo / step), round(hi / step)
    if abs(i0 * step - lo) > 1e-9 * step or abs(i1 * step - hi) > 1e-9 * step:
        raise InvalidDistributionError("uniform end points must lie on the grid lattice")
    return GridDistribution.build(i0, step, np.full(i1 - i0 + 1, 1.0 / (hi - lo)), trim=False)


def _common_step(*dists, default: float = DEFAULT_STEP) -> float:
    steps = {d.step for d in dists if isinstance(d, GridDistribution)}
    if len(steps) > 1:
        raise InvalidDistributionError(f"grid operands use different steps {sorted(steps)}")
    return steps.pop() if steps else default


def _trapezoid_weights(d: np.ndarray) -> np.ndarray:
    w = d.copy()
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _convolve(a: GridDistribution, b: GridDistribution) -> GridDistribution:
    if not math.isclose(a.step, b.step, rel_tol=1e-12):
        raise InvalidDistributionError(f"cannot convolve grids with steps {a.step} and {b.step}")
    h = a.step
    # halved end weights make the discrete sum a trapezoid rule even across support jumps
    out = h * signal.convolve(_trapezoid_weights(a.density), _trapezoid_weights(b.density))
    return GridDistribution.build(a.start + b.start, h, out, shift=a.shift + b.shift)


def sum_of(d1: DurationDistribution, d2: DurationDistribution, step: float | None = None) -> DurationDistribution:
    """Distribution of X1 + X2 for independent X1 ~ d1, X2 ~ d2."""
    if isinstance(d1, PointMass):
        return d2.shifted(d1.value)
    if isinstance(d2, PointMass):
        return d1.shifted(d2.value)
    if isinstance(d1, Normal) and isinstance(d2, Normal):
        return Normal(d1.mu + d2.mu, math.hypot(d1.sigma, d2.sigma))
    h = step if step is not None else _common_step(d1, d2)
    return _convolve(d1.to_grid(h), d2.to_grid(h))


def diff_of(d1: DurationDistribution, d2: DurationDistribution, step: float | None = None) -> DurationDistribution:
    """Distribution of X1 - X2; the result may put mass on negative values."""
    if step is None:
        step = _common_step(d1, d2)
    neg = d2.negated() if not isinstance(d2, Exponential) else d2.to_grid(step).negated()
    return sum_of(d1, neg, step)


def residual(d: DurationDistribution, step: float = DEFAULT_STEP) -> DurationDistribution:
    """Residual lifetime: remaining duration seen by a random observer.

    CCDF of the result is ``(1/E[d]) * integral_t^inf CCDF_d(u) du``, so its
    density is ``CCDF_d(t) / E[d]`` on t >= 0.  Exponentials map to
    themselves; everything else is tabulated on the lattice.
    """
    if isinstance(d, Exponential):
        return d
    if isinstance(d, Normal):
        return _normal_residual(d, step)
    return _tabulated_residual(d, step)


@lru_cache(maxsize=64)
def _normal_residual(d: Normal, step: float) -> GridDistribution:
    return _tabulated_residual(d, step)


def _tabulated_residual(d: DurationDistribution, step: float) -> GridDistribution:
    m = d.mean()
    if not math.isfinite(m) or m <= 0:
        raise InvalidDistributionError(f"residual needs a finite positive mean, got {m}")
    neg = d.negative_mass()
    if neg > NEGATIVE_MASS_LIMIT:
        raise InvalidDistributionError(f"residual needs a nonnegative duration; P(X < 0) = {neg:.3g}")
    if isinstance(d, PointMass):
        return uniform(0.0, d.value, step)
    n = math.ceil(d.upper() / step - 1e-9)
    if n < 1:
        raise InvalidDistributionError("residual support collapses to a point")
    t = np.arange(n + 1) * step
    return GridDistribution.build(0, step, d.sf(t))
