"""Property checks behind ``ctseir validate``.

Each check counts passes and failures over a seeded batch of random
parameter draws, so a summary can say how often a property held rather
than only whether it did.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .seir import EpidemicParams, initial_state, integrate
from .stability import (
    INFEASIBLE_SIGN_PATTERNS,
    K0_BAND,
    char_poly_coeffs,
    condition_c1,
    eigen_stability,
    jacobian_matrix,
    margin_of,
    sign_pattern,
)
from .stochastic import integer_state, simulate
from .sweep import bisect_min_alpha

IMAG_TOL = 1e-7
FAULTS = ("k0_sign",)


@dataclass
class CheckResult:
    name: str
    passed: int = 0
    failed: int = 0
    gating: bool = True
    examples: list = field(default_factory=list)

    def record(self, ok: bool, detail=None) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if detail is not None and len(self.examples) < 3:
                self.examples.append(detail)

    @property
    def ok(self) -> bool:
        return self.failed == 0


def random_draws(n: int, seed: int, supercritical: bool = True) -> list[EpidemicParams]:
    """Random rates: gamma, epsilon in [0.1, 1], alpha in [0, 1], theta, psi in [0, 2 beta].

    ``beta`` lies in (gamma, 5 gamma] when ``supercritical`` and in (0, gamma] otherwise.
    """
    rng = np.random.default_rng(seed)
    gamma = rng.uniform(0.1, 1.0, n)
    # 1 - U(0,1) keeps the open end at gamma and the closed end at 5 gamma
    u = 1.0 - rng.random(n)
    beta = gamma * (1.0 + 4.0 * u) if supercritical else gamma * u
    eps = rng.uniform(0.1, 1.0, n)
    alpha = rng.uniform(0.0, 1.0, n)
    theta = rng.uniform(0.0, 2.0, n) * beta
    psi = rng.uniform(0.0, 2.0, n) * beta
    return [EpidemicParams(beta=b, gamma=g, epsilon=e, alpha=a, theta=t, psi=p)
            for b, g, e, a, t, p in zip(beta, gamma, eps, alpha, theta, psi)]


def _describe(p: EpidemicParams, **extra) -> dict:
    d = {k: v for k, v in asdict(p).items() if k != "N"}
    d.update(extra)
    return d


def stability_checks(draws: int = 10_000, seed: int = 0, fault: str | None = None) -> list[CheckResult]:
    """C1 against eigenvalues plus the coefficient identities, over random draws.

    ``fault="k0_sign"`` flips the sign of the constant coefficient before
    the comparisons, which must make the suite fail.
    """
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; expected one of {FAULTS}")
    equiv = CheckResult("c1_matches_eigenvalues")
    k0_eig = CheckResult("k0_sign_matches_eigenvalues")
    det = CheckResult("k0_equals_det_A")
    poly = CheckResult("coefficients_match_expansion")
    chain = CheckResult("sign_chain_k0_k1_k2")
    table = CheckResult("no_infeasible_sign_pattern")
    real = CheckResult("eigenvalues_real", gating=False)
    sub = CheckResult("subcritical_stable")
    for p in random_draws(draws, seed):
        k = char_poly_coeffs(p)
        if fault == "k0_sign":
            k = k.copy()
            k[-1] = -k[-1]
        A = jacobian_matrix(p)
        ev, max_re = eigen_stability(p)
        margin = margin_of(p)
        d = np.linalg.det(A)
        det.record(abs(k[-1] - d) <= 1e-9 * abs(d) + 1e-14, _describe(p, k0=k[-1], det=d))
        expanded = np.poly(A).real
        poly.record(bool(np.all(np.abs(k - expanded) <= 1e-9 * np.maximum(1.0, np.abs(expanded)))),
                    _describe(p))
        if abs(k[-1]) >= K0_BAND:
            equiv.record((margin > 0) == (max_re < 0), _describe(p, margin=margin, max_real=max_re))
            k0_eig.record(np.sign(max_re) == -np.sign(k[-1]), _describe(p, k0=k[-1], max_real=max_re))
        chain.record(not k[-1] > 0 or (k[-2] > 0 and k[-3] > 0), _describe(p, k=list(k)))
        table.record(sign_pattern(k) not in INFEASIBLE_SIGN_PATTERNS, _describe(p, k=list(k)))
        imag = np.abs(ev.imag)
        real.record(bool(np.all(imag < IMAG_TOL * np.maximum(1.0, np.abs(ev.real)))),
                    _describe(p, max_imag=float(imag.max())))
    for p in random_draws(max(draws // 10, 1), seed + 1, supercritical=False):
        _, max_re = eigen_stability(p)
        sub.record(max_re < 0, _describe(p, max_real=max_re))
    return [equiv, k0_eig, det, poly, chain, table, real, sub]


def triangular_oracle_check(draws: int = 200, seed: int = 0) -> CheckResult:
    """With beta = 0 (hence theta = p_E alpha beta = 0) the matrix is lower triangular.

    Its eigenvalues are then -eps, -gamma, -eps, -gamma-psi for any psi.
    """
    res = CheckResult("zero_beta_triangular_eigenvalues")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        g, e, a, s = rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.random(), rng.random()
        A = zero_beta_jacobian(g, e, a, s)
        ev = np.sort(np.linalg.eigvals(A).real)
        want = np.sort([-e, -g, -e, -g - s])
        res.record(bool(np.all(np.abs(ev - want) < 1e-9)), {"got": list(ev), "want": list(want)})
    return res


def zero_beta_jacobian(gamma: float, epsilon: float, alpha: float, psi: float) -> np.ndarray:
    """Linearised matrix at beta = 0, theta = 0.

    EpidemicParams requires beta > 0, so the matrix is built at beta = 1
    and the beta terms are zeroed.
    """
    A = jacobian_matrix(EpidemicParams(beta=1.0, gamma=gamma, epsilon=epsilon, alpha=alpha, psi=psi))
    A[0, 1] = A[0, 3] = A[2, 1] = A[2, 3] = 0.0
    return A


def limit_case_checks(pairs: int = 20, seed: int = 0) -> list[CheckResult]:
    """Large theta + psi pushes the boundary to 1 - gamma/beta; alpha = 1 reduces to gamma + theta + psi > beta."""
    rng = np.random.default_rng(seed)
    big = CheckResult("large_removal_boundary")
    full = CheckResult("full_uptake_condition")
    for _ in range(pairs):
        g = rng.uniform(0.1, 1.0)
        b = g * rng.uniform(1.05, 5.0)
        a_min = bisect_min_alpha(lambda a: condition_c1(a, b, g, 5e8, 5e8))
        big.record(a_min is not None and abs(a_min - (1 - g / b)) < 1e-3,
                   {"beta": b, "gamma": g, "alpha_min": a_min})
        split = rng.random()
        for delta in (1e-6, -1e-6):
            total = b - g + delta
            m = condition_c1(1.0, b, g, split * total, (1 - split) * total)
            full.record((m > 0) == (delta > 0), {"beta": b, "gamma": g, "delta": delta, "margin": m})
    return [big, full]


def simulation_checks(seed: int = 0, runs: int = 5) -> list[CheckResult]:
    """Conservation in both simulators and bit-identical stochastic replays."""
    cons = CheckResult("stochastic_conservation")
    repro = CheckResult("stochastic_reproducible")
    ode = CheckResult("ode_conservation")
    p = EpidemicParams(beta=1.0, gamma=0.5, epsilon=1 / 3, alpha=0.5, theta=0.2, psi=0.2)
    init = integer_state(2000, p.alpha, 20)
    for s in range(seed, seed + runs):
        a = simulate(p, init, s, t_end=200.0, sample_dt=0.5)
        b = simulate(p, init, s, t_end=200.0, sample_dt=0.5)
        cons.record(bool(np.all(a.counts.sum(axis=1) == init.sum()) and np.all(a.counts >= 0)), {"seed": s})
        repro.record(bool(np.array_equal(a.counts, b.counts) and a.events == b.events), {"seed": s})
    tr = integrate(EpidemicParams(beta=1.0, gamma=0.5, epsilon=1 / 3, alpha=0.5, theta=0.2, psi=0.2, N=1e5),
                   initial_state(1e5, 0.5, 100), 200.0)
    total = tr.y.sum(axis=1)
    ode.record(bool(np.all(np.abs(total - 1e5) <= 1e-9 * 1e5)), {"max_drift": float(np.abs(total - 1e5).max())})
    return [cons, repro, ode]


def run_suite(draws: int = 10_000, seed: int = 0, fault: str | None = None,
              stochastic: bool = True) -> dict:
    """All checks as a JSON-ready summary; ``ok`` is False if any gating check failed."""
    results = stability_checks(draws, seed, fault)
    results.append(triangular_oracle_check(seed=seed))
    results.extend(limit_case_checks(seed=seed))
    if stochastic:
        results.extend(simulation_checks(seed))
    checks = {r.name: {"passed": r.passed, "failed": r.failed, "gating": r.gating,
                       **({"examples": _jsonable(r.examples)} if r.failed else {})} for r in results}
    return {"ok": all(r.ok for r in results if r.gating), "draws": draws, "seed": seed,
            "fault": fault, "checks": checks}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj
