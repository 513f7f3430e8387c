"""Property suites behind ``testroll validate``.

Each suite returns a :class:`SuiteReport` with the measured worst deviation
and a pass flag; none of them raise on failure.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .bernoulli_model import (BernoulliState, DesignContext, error_prob, exact_identity_gap,
                              hoeffding_error_bound)
from .criteria import evaluate, hoeffding_wmb_cap, wmb_ratio, wmb_ratio_batch, wmb_ratio_na
from .dist_core import TrinomialWalk, walk_pmf, walk_pmf_tilted
from .errors import ConfigurationError
from .gaussian_model import (GaussianState, LimitCurve, gaussian_error_prob, limit_curve_derivative,
                             limit_curve_sup, limit_curve_value)
from .montecarlo import SimConfig, simulate_error_prob, simulate_regret
from .search import GridPoints, GridSpec, LocalRegion, SearchConfig, localization_from_trace, wmb_sample_size

__all__ = ["SuiteReport", "SUITES", "run_suite", "run_suites"]


@dataclass
class SuiteReport:
    suite: str
    passed: bool
    cases: int
    metrics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def exact_identity(seed: int = 0, cases: int = 1000, m_max: int = 2000, tol: float = 1e-12) -> SuiteReport:
    """e(m) - e(m+2) against |delta| P(S_n = 0) from the same DP."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(cases):
        m = 2 * int(rng.integers(1, m_max // 2 + 1))
        s = BernoulliState(float(rng.random()), float(rng.random()))
        lhs, rhs = exact_identity_gap(DesignContext(m + 2, m), s)
        worst = max(worst, abs(lhs - rhs))
    return SuiteReport("exact-identity", worst < tol, cases, {"max_abs_deviation": worst, "tolerance": tol})


def tilt_identity(seed: int = 0, cases: int = 200, n_max: int = 500, tol: float = 1e-12) -> SuiteReport:
    rng = _rng(seed)
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, n_max + 1))
        # interior walk: both means strictly inside (0, 1)
        mu1, mu0 = (float(v) for v in rng.uniform(0.01, 0.99, 2))
        walk = TrinomialWalk.from_means(mu1, mu0, n)
        worst = max(worst, float(np.max(np.abs(walk_pmf_tilted(walk) - walk_pmf(walk)))))
    return SuiteReport("tilt-identity", worst < tol, cases, {"max_abs_deviation": worst, "tolerance": tol})


def hoeffding(seed: int = 0, cases: int = 300) -> SuiteReport:
    """e(m) <= exp(-m tau^2/4) and eta <= (N - m) exp(-m tau^2/4) off the diagonal."""
    rng = _rng(seed)
    worst_e = -math.inf
    worst_eta = -math.inf
    for _ in range(cases):
        N = 2 * int(rng.integers(2, 301))
        m = 2 * int(rng.integers(1, N // 2))
        s = BernoulliState(float(rng.random()), float(rng.random()))
        ctx = DesignContext(N, m)
        worst_e = max(worst_e, error_prob(ctx, s) - hoeffding_error_bound(ctx, s))
        worst_eta = max(worst_eta, wmb_ratio(ctx, s).value - float(hoeffding_wmb_cap(N, m, abs(s.tau))))
    ok = worst_e <= 1e-15 and worst_eta <= 1e-12
    return SuiteReport("hoeffding", ok, cases,
                       {"max_error_excess": worst_e, "max_ratio_excess": worst_eta})


def localization(N: int = 5000, epsilon: float = 0.01, workers: int = 1) -> SuiteReport:
    rec = wmb_sample_size(N, GridSpec.wmb(epsilon), SearchConfig(workers=workers))
    rows = localization_from_trace(rec)
    applicable = [r for r in rows if r.bound_applies]
    violations = [r.m for r in applicable if not r.holds]
    slack = min((r.bound - r.gap for r in applicable), default=math.inf)
    return SuiteReport("localization", not violations, len(applicable),
                       {"N": N, "epsilon": epsilon, "m_star": rec.m_star, "violations": violations,
                        "min_bound_slack": slack})


def _random_mc_case(rng: np.random.Generator):
    N = 2 * int(rng.integers(2, 501))
    m = 2 * int(rng.integers(1, N // 2))
    # gap on the 1/sqrt(m) scale keeps e(m) resolvable at 1e5 replications;
    # uniform states mostly give e ~ 1e-30, where a zero-variance sample says nothing
    mid = float(rng.uniform(0.1, 0.9))
    half = min(float(rng.uniform(0.0, 1.5)) / math.sqrt(m), mid, 1.0 - mid)
    if rng.random() < 0.5:
        half = -half
    s = BernoulliState.from_centered(mid, half)
    return DesignContext(N, m), s


def montecarlo(seed: int = 42, cases: int = 20, replications: int = 100_000, z: float = 4.0,
               required: int = 19, workers: int = 1) -> SuiteReport:
    """Exact error probabilities and regrets against simulation; alternate cases use each."""
    rng = _rng(seed)
    inside = 0
    worst_z = 0.0
    for i in range(cases):
        ctx, s = _random_mc_case(rng)
        cfg = SimConfig(replications, seed * 1000 + i, s, ctx, workers=workers)
        if i % 2 == 0:
            est, exact = simulate_error_prob(cfg), error_prob(ctx, s)
        else:
            est, exact = simulate_regret(cfg), evaluate(ctx, s).regret
        dev = abs(est.mean - exact)
        score = dev / est.std_error if est.std_error > 0 else (0.0 if dev == 0 else math.inf)
        worst_z = max(worst_z, score)
        inside += score <= z
    return SuiteReport("montecarlo", inside >= required, cases,
                       {"within": inside, "required": required, "z": z, "max_z": worst_z,
                        "replications": replications})


def _na_deviation(N: int, kappa: float = 0.1, big_k: float = 1.0, size: int = 20) -> float:
    m = N // 2
    states = LocalRegion(kappa, big_k, N).states(size, size)
    pts = GridPoints.from_arrays([s.mu1 for s in states], [s.mu0 for s in states])
    sweep = pts.sweep()
    sweep.advance_to(m // 2)
    exact = wmb_ratio_batch(N, m, sweep.error, sweep.tie, sweep.half_gap)
    ctx = DesignContext(N, m)
    approx = np.array([wmb_ratio_na(ctx, s) for s in states])
    return float(np.max(np.abs(exact - approx)))


def na_agreement(sizes=(2000, 20000), tol: float = 0.05) -> SuiteReport:
    devs = [_na_deviation(N) for N in sizes]
    decreasing = all(b < a for a, b in zip(devs, devs[1:]))
    return SuiteReport("na-agreement", decreasing and devs[-1] <= tol, len(sizes) * 400,
                       {"N": list(sizes), "max_abs_deviation": devs, "tolerance": tol})


def gaussian_closed_form(ks=(2.5, 3.0, 4.0, 5.0, 10.0, 50.0), tol: float = 1e-8) -> SuiteReport:
    """Closed-form sup of f_k against a numeric root of f_k' and a bounded scalar maximiser."""
    worst_arg = 0.0
    worst_sup = 0.0
    for k in ks:
        curve = LimitCurve(k)
        sup, t_star = limit_curve_sup(curve)
        root = optimize.brentq(lambda t: limit_curve_derivative(curve, t), 1e-9, 10.0, xtol=1e-15)
        res = optimize.minimize_scalar(lambda t: -limit_curve_value(curve, t), bounds=(0.0, 10.0),
                                       method="bounded", options={"xatol": 1e-12})
        worst_arg = max(worst_arg, abs(root - t_star))
        worst_sup = max(worst_sup, float(abs(-res.fun - sup)))
    # Gaussian error probability against its definition at a few points
    worst_e = max(abs(gaussian_error_prob(m, GaussianState(tau, 1.0)) - 0.5 * math.erfc(math.sqrt(m) * tau / (2 * math.sqrt(2))))
                  for m in (2, 50, 1000) for tau in (0.01, 0.2, 1.0))
    ok = worst_arg < tol and worst_sup < tol and worst_e < 1e-15
    return SuiteReport("gaussian-closed-form", ok, len(ks),
                       {"max_argmax_deviation": worst_arg, "max_sup_deviation": worst_sup,
                        "max_error_prob_deviation": worst_e, "tolerance": tol})


SUITES = {
    "exact-identity": exact_identity,
    "tilt-identity": tilt_identity,
    "hoeffding": hoeffding,
    "localization": localization,
    "montecarlo": montecarlo,
    "na-agreement": na_agreement,
    "gaussian-closed-form": gaussian_closed_form,
}


def run_suite(name: str, seed: int | None = None, workers: int = 1) -> SuiteReport:
    if name not in SUITES:
        raise ConfigurationError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    kwargs = {}
    if seed is not None and name in ("exact-identity", "tilt-identity", "hoeffding", "montecarlo"):
        kwargs["seed"] = seed
    if name in ("localization", "montecarlo"):
        kwargs["workers"] = workers
    return SUITES[name](**kwargs)


def run_suites(names, seed: int | None = None, workers: int = 1) -> dict:
    reports = [run_suite(n, seed, workers) for n in names]
    return {"passed": all(r.passed for r in reports), "suites": [r.as_dict() for r in reports]}
