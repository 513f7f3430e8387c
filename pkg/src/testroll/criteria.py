"""Welfare, regret and the marginal cost-benefit ratio built on the model modules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bernoulli_model import BernoulliState, DesignContext, ErrorProbEvaluator, error_prob
from .dist_core import normal_cdf, normal_pdf
from .errors import DomainError, UndefinedCriterionError

__all__ = [
    "EvalBreakdown",
    "MarginalRatio",
    "evaluate",
    "relative_regret",
    "wmb_ratio",
    "wmb_ratio_na",
    "boundary_pathology_ratio",
    "superpop_regret",
    "regret_batch",
    "relative_regret_batch",
    "wmb_ratio_batch",
    "hoeffding_wmb_cap",
    "gaussian_minimax_regret",
]


@dataclass(frozen=True)
class EvalBreakdown:
    m: int
    exploration_cost: float
    exploitation_risk: float
    regret: float
    error_prob: float
    oracle_welfare: float
    relative_regret: float | None

    @property
    def welfare(self) -> float:
        return self.oracle_welfare - self.regret


@dataclass(frozen=True)
class MarginalRatio:
    m: int
    value: float


def evaluate(ctx: DesignContext, s: BernoulliState) -> EvalBreakdown:
    e = error_prob(ctx, s)
    gap = abs(s.tau)
    cost = 0.5 * ctx.m * gap
    risk = (ctx.N - ctx.m) * gap * e
    regret = cost + risk
    oracle = ctx.N * max(s.mu1, s.mu0)
    return EvalBreakdown(
        m=ctx.m,
        exploration_cost=cost,
        exploitation_risk=risk,
        regret=regret,
        error_prob=e,
        oracle_welfare=oracle,
        relative_regret=regret / oracle if oracle > 0 else None,
    )


def relative_regret(ctx: DesignContext, s: BernoulliState) -> float:
    """Regret over oracle welfare.  Degenerate as a design criterion; see README."""
    if max(s.mu1, s.mu0) == 0.0:
        raise UndefinedCriterionError("relative regret is undefined when both arms never succeed")
    return evaluate(ctx, s).relative_regret


def superpop_regret(s: BernoulliState, error_probability: float) -> float:
    """Per-unit rollout shortfall |tau| * e."""
    if not (0.0 <= error_probability <= 1.0):
        raise DomainError(f"error probability must lie in [0, 1], got {error_probability!r}")
    return abs(s.tau) * error_probability


def wmb_ratio(ctx: DesignContext, s: BernoulliState) -> MarginalRatio:
    """(N - m) e(m) - (N - m - 2) e(m + 2), from one forward DP pass."""
    if ctx.m > ctx.N - 2:
        raise DomainError(f"marginal ratio needs m <= N - 2 (m={ctx.m}, N={ctx.N})")
    if s.on_diagonal:
        return MarginalRatio(ctx.m, 1.0)
    ev = ErrorProbEvaluator(s, ctx.n + 1)
    ev.advance_to_m(ctx.m)
    e_m = ev.error_prob()
    ev.advance()
    e_next = ev.error_prob()
    value = (ctx.N - ctx.m) * e_m - (ctx.N - ctx.m - 2) * e_next
    return MarginalRatio(ctx.m, value)


def wmb_ratio_na(ctx: DesignContext, s: BernoulliState) -> float:
    """Normal-approximation ratio 2 Phi(-t) + (N - m)/m * t phi(t)."""
    if ctx.m < 2:
        raise DomainError("normal-approximation ratio needs m >= 2")
    v = s.mu1 * (1.0 - s.mu1) + s.mu0 * (1.0 - s.mu0)
    if v == 0.0:
        raise DomainError("normal-approximation ratio needs a nondegenerate arm (v > 0)")
    t = math.sqrt(ctx.m) * abs(s.tau) / math.sqrt(2.0 * v)
    k = (ctx.N - ctx.m) / ctx.m
    return 2.0 * normal_cdf(-t) + k * t * normal_pdf(t)


def boundary_pathology_ratio(N: float, m: float, c: float) -> float:
    """Relaxed ratio along the rare-event boundary sequence (mu1, mu0) = (c/N, 0)."""
    if not (0.0 < m < N):
        raise DomainError(f"need 0 < m < N, got m={m!r}, N={N!r}")
    if not (c > 0.0):
        raise DomainError(f"scale c must be positive, got {c!r}")
    tau = c / N
    if tau >= 1.0:
        raise DomainError(f"tau = c/N must be below 1, got {tau!r}")
    log_miss = math.log1p(-tau)
    return math.exp(0.5 * m * log_miss) * (1.0 - 0.5 * (N - m) * log_miss)


# --- array forms used by the grid searches ---------------------------------------

def regret_batch(N: int, m: int, gap, err):
    """(m/2)|tau| + (N - m)|tau| e for arrays of |tau| and e."""
    gap = np.asarray(gap, dtype=float)
    return 0.5 * m * gap + (N - m) * gap * err


def relative_regret_batch(N: int, m: int, gap, err, best_mean):
    return regret_batch(N, m, gap, err) / (N * np.asarray(best_mean, dtype=float))


def wmb_ratio_batch(N: int, m: int, err, tie, half_gap):
    """eta at m from e(m) and P(S_n = 0).

    Uses e(m) - e(m+2) = |delta| P(S_n = 0), i.e.
    eta = 2 e(m) + |delta| (N - m - 2) P(S_n = 0), which avoids the
    cancellation in the two-term difference for large N.
    """
    return 2.0 * err + half_gap * (N - m - 2) * tie


def hoeffding_wmb_cap(N: int, m: int, gap):
    """(N - m) exp(-m tau^2 / 4) >= eta for every state with |tau| = gap."""
    gap = np.asarray(gap, dtype=float)
    return (N - m) * np.exp(-m * gap * gap / 4.0)


def gaussian_minimax_regret(*_args, **_kwargs):
    """Not offered: with Gaussian outcomes the worst-case regret is maximised
    at an unbounded effect scale and the minimax criterion gives no finite
    interior recommendation.  Use the WMB rule (N/3) instead."""
    raise UndefinedCriterionError(
        "absolute minimax regret gives no meaningful recommendation in the Gaussian model; "
        "use the gaussian-wmb criterion")
