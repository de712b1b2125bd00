import itertools
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given
from hypothesis import strategies as st

from ctseir import stability
from ctseir.checks import random_draws, zero_beta_jacobian
from ctseir.seir import EpidemicParams
from ctseir.stability import (
    INFEASIBLE_SIGN_PATTERNS,
    ConsistencyError,
    char_poly_coeffs,
    condition_c1,
    eigen_stability,
    jacobian_matrix,
    reduced_coeffs,
    sign_changes,
    sign_pattern,
    stability_report,
)
from ctseir.tracing import ConfigurationError

params_st = st.builds(
    lambda g, r, e, a, t, p: EpidemicParams(beta=g * r, gamma=g, epsilon=e, alpha=a, theta=t * g * r, psi=p * g * r),
    st.floats(0.1, 1.0), st.floats(1.0, 5.0, exclude_min=True), st.floats(0.1, 1.0), st.floats(0.0, 1.0),
    st.floats(0.0, 2.0), st.floats(0.0, 2.0),
)


# --- condition C1 ---------------------------------------------------------------------

@given(st.floats(0.1, 1.0), st.floats(1.01, 5.0))
def test_large_removal_threshold(gamma, r0):
    beta = gamma * r0
    a = 1 - gamma / beta
    assert condition_c1(a + 1e-3, beta, gamma, 5e8, 5e8) > 0
    assert condition_c1(a - 1e-3, beta, gamma, 5e8, 5e8) < 0


@given(st.floats(0.1, 1.0), st.floats(1.01, 5.0), st.floats(0.0, 1.0))
def test_full_uptake_threshold(gamma, r0, split):
    beta = gamma * r0
    for delta in (1e-6, -1e-6):
        total = beta - gamma + delta
        m = condition_c1(1.0, beta, gamma, split * total, (1 - split) * total)
        assert (m > 0) == (delta > 0)


def test_sentinels_without_removal():
    assert condition_c1(0.0, 1.0, 0.5, 0.0, 0.0) == -math.inf
    assert condition_c1(0.7, 0.5, 0.5, 0.0, 0.0) == math.inf
    assert condition_c1(0.0, 0.2, 0.5, 0.0, 0.0) == math.inf


@pytest.mark.parametrize("beta,gamma", [(0.0, 0.5), (1.0, 0.0), (-1.0, 0.5)])
def test_c1_rejects_nonpositive_rates(beta, gamma):
    with pytest.raises(ConfigurationError):
        condition_c1(0.5, beta, gamma, 0.1, 0.1)


@given(params_st)
def test_margin_is_scaled_constant_coefficient(p):
    assume(p.theta + p.psi > 1e-6)  # avoid cancellation as theta + psi -> 0
    _, _, k0_red = reduced_coeffs(p)
    assert stability.margin_of(p) == pytest.approx(k0_red / (p.beta * (p.theta + p.psi)), rel=1e-9, abs=1e-12)


# --- matrix and coefficients ------------------------------------------------------------

@given(params_st)
def test_trace(p):
    assert np.trace(jacobian_matrix(p)) == pytest.approx(-2 * p.epsilon - 2 * p.gamma - p.psi)


def test_no_tracking_is_block_triangular():
    A = jacobian_matrix(EpidemicParams(beta=1.0, gamma=0.5, epsilon=0.3))
    assert np.all(A[2:, :2] == 0)
    seir_block = np.array([[-0.3, 1.0], [0.3, -0.5]])
    np.testing.assert_array_equal(A[:2, :2], seir_block)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(A).real),
                               np.sort([*np.linalg.eigvals(seir_block).real, -0.3, -0.5]), atol=1e-12)


def test_coefficients_against_symbolic_determinant():
    x, b, g, e, a, th, ps = sp.symbols("x beta gamma epsilon alpha theta psi")
    A = sp.Matrix([[-e, b * (1 - a), 0, b * (1 - a)],
                   [e, -g, 0, 0],
                   [0, b * a, -e, b * a - th],
                   [0, 0, e, -g - ps]])
    poly = sp.Poly((x * sp.eye(4) - A).det(), x)
    exprs = [sp.lambdify((b, g, e, a, th, ps), c) for c in poly.all_coeffs()]
    for p in random_draws(200, seed=11):
        want = np.array([f(p.beta, p.gamma, p.epsilon, p.alpha, p.theta, p.psi) for f in exprs], dtype=float)
        np.testing.assert_allclose(char_poly_coeffs(p), want, rtol=1e-12, atol=1e-14)


@given(params_st)
def test_reduced_forms(p):
    e, b, g, a, th, ps = p.epsilon, p.beta, p.gamma, p.alpha, p.theta, p.psi
    k = char_poly_coeffs(p)
    assert k[0] == 1.0
    assert k[1] == pytest.approx(2 * e + 2 * g + ps)
    assert k[2] == pytest.approx(-b * e + e * e + g * (g + ps) + e * (4 * g + 2 * ps + th))
    k1_red = e * (2 * g + ps + th) + g * (2 * (g + ps) + th) - b * (e + g + ps - ps * a)
    k0_red = -(b - g) * (g + ps + th) + b * (ps + th) * a
    assert k[3] == pytest.approx(e * k1_red, rel=1e-12, abs=1e-14)
    assert k[4] == pytest.approx(e * e * k0_red, rel=1e-12, abs=1e-14)


@given(params_st)
def test_constant_coefficient_is_determinant(p):
    k0 = char_poly_coeffs(p)[-1]
    d = np.linalg.det(jacobian_matrix(p))
    assert abs(k0 - d) <= 1e-9 * abs(d) + 1e-14  # absolute floor for roundoff when k0 ~ 0


def test_critical_constant_coefficient_vanishes():
    assert char_poly_coeffs(EpidemicParams(beta=0.5, gamma=0.5, epsilon=0.3))[-1] == 0.0


@given(params_st)
def test_sign_chain(p):
    k = char_poly_coeffs(p)
    if k[4] > 0:
        assert k[3] > 0 and k[2] > 0
    assert sign_pattern(k) not in INFEASIBLE_SIGN_PATTERNS


def test_infeasible_patterns_are_chain_violations():
    for s2, s1, s0 in itertools.product((1, -1), repeat=3):
        violates = s0 > 0 and (s1 < 0 or s2 < 0) or s1 > 0 and s2 < 0
        assert ((1, 1, s2, s1, s0) in INFEASIBLE_SIGN_PATTERNS) == violates


def test_sign_changes():
    assert sign_changes([1, 2, 3, 4, 5]) == 0
    assert sign_changes([1, 2, -3, 4, -5]) == 3
    assert sign_changes([1, 0, -1]) == 1


# --- eigenvalues --------------------------------------------------------------------------

@given(st.floats(0.1, 1.0), st.floats(0.1, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 2.0))
def test_zero_beta_eigenvalues(gamma, epsilon, alpha, psi):
    ev = np.sort(np.linalg.eigvals(zero_beta_jacobian(gamma, epsilon, alpha, psi)).real)
    np.testing.assert_allclose(ev, np.sort([-epsilon, -gamma, -epsilon, -gamma - psi]), atol=1e-9)


@given(params_st)
def test_c1_matches_eigenvalues(p):
    k0 = char_poly_coeffs(p)[-1]
    assume(abs(k0) >= 1e-6)
    _, max_re = eigen_stability(p)
    assert (stability.margin_of(p) > 0) == (max_re < 0)
    assert np.sign(max_re) == -np.sign(k0)


@given(st.floats(0.1, 1.0), st.floats(0.05, 1.0), st.floats(0.1, 1.0), st.floats(0, 1), st.floats(0, 2),
       st.floats(0, 2))
def test_subcritical_always_stable(gamma, ratio, eps, alpha, t, s):
    p = EpidemicParams(beta=gamma * ratio, gamma=gamma, epsilon=eps, alpha=alpha, theta=t, psi=s)
    assert eigen_stability(p)[1] < 0


def test_eigenvalues_can_be_complex():
    # det(xI - A) = x^4 + 4.5 x^3 + 5.5 x^2 + 0.75 x - 2.75, negative discriminant
    p = EpidemicParams(beta=3.0, gamma=1.0, epsilon=1.0, alpha=0.5, theta=1.0, psi=0.5)
    np.testing.assert_allclose(char_poly_coeffs(p), [1, 4.5, 5.5, 0.75, -2.75])
    x = sp.symbols("x")
    assert sp.discriminant(x**4 + sp.Rational(9, 2) * x**3 + sp.Rational(11, 2) * x**2
                           + sp.Rational(3, 4) * x - sp.Rational(11, 4)) == sp.Rational(-598725, 256)
    ev, _ = eigen_stability(p)
    assert np.abs(ev.imag).max() == pytest.approx(0.738, abs=1e-3)


# --- report ---------------------------------------------------------------------------------

def test_report_fields():
    rep = stability_report(EpidemicParams(beta=1.0, gamma=0.5, epsilon=1 / 3, alpha=0.95, theta=0.9, psi=0.02))
    assert rep.controlled == (rep.c1_margin > 0)
    assert rep.k_coeffs[0] == 1 and len(rep.eigenvalues) == 4
    assert rep.controlled and rep.max_real_part < 0 and rep.sign_changes == 0
    d = rep.as_dict()
    assert set(d) >= {"c1_margin", "controlled", "k_coeffs", "max_real_part", "sign_changes"}


def test_report_uncontrolled():
    rep = stability_report(EpidemicParams(beta=1.0, gamma=0.5, epsilon=1 / 3))
    assert rep.c1_margin == -math.inf and not rep.controlled
    assert rep.max_real_part == pytest.approx(1 / 6)
    assert rep.sign_changes == 1


def test_report_detects_inconsistency(monkeypatch):
    real = stability.char_poly_coeffs

    def corrupted(p):
        k = real(p).copy()
        k[-1] = -k[-1]
        return k

    monkeypatch.setattr(stability, "char_poly_coeffs", corrupted)
    with pytest.raises(ConsistencyError):
        stability_report(EpidemicParams(beta=1.0, gamma=0.5, epsilon=1 / 3, alpha=0.9, theta=0.5, psi=0.2))
