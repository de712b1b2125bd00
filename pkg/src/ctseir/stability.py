"""Closed-form controllability condition and the linear stability behind it.

Near the disease-free state the infected compartments ``[E_U, I_U, E_T, I_T]``
evolve as ``y' = A y``.  The epidemic is controlled when every eigenvalue
of ``A`` has a negative real part.  The sign of the constant coefficient of
the characteristic quartic decides this, and that sign reduces to the
closed-form condition ``alpha - (1 + gamma/(theta+psi)) (1 - gamma/beta) > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seir import EpidemicParams
from .tracing import ConfigurationError

# Sign patterns of [k4, k3, k2, k1, k0] that the coefficient sign chain
# k0 > 0 => k1 > 0 => k2 > 0 rules out (k4 = 1 and k3 > 0 always).
INFEASIBLE_SIGN_PATTERNS = frozenset({
    (1, 1, 1, -1, 1),
    (1, 1, -1, 1, 1),
    (1, 1, -1, 1, -1),
    (1, 1, -1, -1, 1),
})

K0_BAND = 1e-6
COEFF_RTOL = 1e-9


class ConsistencyError(AssertionError):
    """The closed-form and numerical stability verdicts disagree."""


def condition_c1(alpha: float, beta: float, gamma: float, theta: float, psi: float) -> float:
    """Controllability margin; the epidemic is controlled iff the margin is positive.

    Without tracing removals (``theta + psi == 0``) the margin is ``-inf``
    for a supercritical epidemic and ``+inf`` when ``beta <= gamma``.
    """
    if not (beta > 0 and gamma > 0):
        raise ConfigurationError(f"beta and gamma must be positive, got beta={beta}, gamma={gamma}")
    removal = theta + psi
    if removal == 0:
        return -math.inf if beta > gamma else math.inf
    return alpha - (1.0 + gamma / removal) * (1.0 - gamma / beta)


def margin_of(params: EpidemicParams) -> float:
    p = params
    return condition_c1(p.alpha, p.beta, p.gamma, p.theta, p.psi)


def jacobian_matrix(params: EpidemicParams) -> np.ndarray:
    """Linearised dynamics of ``[E_U, I_U, E_T, I_T]`` around S = N."""
    e, b, g, a, th, ps = params.epsilon, params.beta, params.gamma, params.alpha, params.theta, params.psi
    return np.array([
        [-e, b * (1 - a), 0.0, b * (1 - a)],
        [e, -g, 0.0, 0.0],
        [0.0, b * a, -e, b * a - th],
        [0.0, 0.0, e, -g - ps],
    ])


def reduced_coeffs(params: EpidemicParams) -> tuple[float, float, float]:
    """``(k2, k1/eps, k0/eps^2)``: the lower coefficients with the epsilon factors removed.

    Dividing out positive factors keeps the signs; ``k0/eps^2`` is
    ``beta (theta+psi)`` times the controllability margin.
    """
    e, b, g, a, th, ps = params.epsilon, params.beta, params.gamma, params.alpha, params.theta, params.psi
    k2 = -b * e + e * e + g * (g + ps) + e * (4 * g + 2 * ps + th)
    k1 = e * (2 * g + ps + th) + g * (2 * (g + ps) + th) - b * (e + g + ps - ps * a)
    k0 = -(b - g) * (g + ps + th) + b * (ps + th) * a
    return k2, k1, k0


def char_poly_coeffs(params: EpidemicParams) -> np.ndarray:
    """Monic coefficients ``[k4, k3, k2, k1, k0]`` of det(xI - A)."""
    e = params.epsilon
    k2, k1_red, k0_red = reduced_coeffs(params)
    k3 = 2 * e + 2 * params.gamma + params.psi
    return np.array([1.0, k3, k2, e * k1_red, e * e * k0_red])


def sign_pattern(coeffs) -> tuple[int, ...]:
    return tuple(1 if c > 0 else -1 for c in coeffs)


def sign_changes(coeffs) -> int:
    """Sign changes along the coefficient list, zeros skipped (Descartes' count)."""
    signs = [c > 0 for c in coeffs if c != 0]
    return sum(s != t for s, t in zip(signs, signs[1:]))


def eigen_stability(params: EpidemicParams) -> tuple[np.ndarray, float]:
    """Eigenvalues of the linearised system and the largest real part."""
    A = jacobian_matrix(params)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigenvalue solver failed for {params}: {exc}") from exc
    ev = ev[np.lexsort((ev.imag, ev.real))]
    return ev, float(ev.real.max())


@dataclass(frozen=True, eq=False)
class StabilityReport:
    c1_margin: float
    controlled: bool
    k_coeffs: np.ndarray
    eigenvalues: np.ndarray
    max_real_part: float
    sign_changes: int

    @property
    def max_abs_imag(self) -> float:
        return float(np.abs(self.eigenvalues.imag).max())

    def as_dict(self) -> dict:
        return {
            "c1_margin": self.c1_margin,
            "controlled": self.controlled,
            "k_coeffs": [float(c) for c in self.k_coeffs],
            "eigenvalues_real": [float(v.real) for v in self.eigenvalues],
            "eigenvalues_imag": [float(v.imag) for v in self.eigenvalues],
            "max_real_part": self.max_real_part,
            "sign_changes": self.sign_changes,
        }


def stability_report(params: EpidemicParams, band: float = K0_BAND) -> StabilityReport:
    """C1 margin, characteristic coefficients and eigenvalues, cross-checked.

    Raises ConsistencyError when the closed-form coefficients disagree with
    the expansion of det(xI - A), or when, outside the ``|k0| < band``
    boundary layer, the C1 verdict disagrees with the eigenvalues.
    """
    margin = margin_of(params)
    k = char_poly_coeffs(params)
    expanded = np.poly(jacobian_matrix(params)).real
    scale = np.maximum(1.0, np.abs(expanded))
    if np.any(np.abs(k - expanded) > COEFF_RTOL * scale * 10):
        raise ConsistencyError(f"closed-form coefficients {k} differ from det(xI - A) = {expanded}")
    ev, max_re = eigen_stability(params)
    controlled = margin > 0
    if abs(k[-1]) > band and params.beta > params.gamma and controlled != (max_re < 0):
        raise ConsistencyError(f"C1 margin {margin:.6g} but max real part {max_re:.6g} for {params}")
    return StabilityReport(margin, controlled, k, ev, max_re, sign_changes(k))
