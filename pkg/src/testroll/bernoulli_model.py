"""Exact finite-sample quantities for the Bernoulli matched-pairs model.

Two evaluation routes live here:

* :func:`error_prob` and :class:`ErrorProbEvaluator` run the full DP over the
  difference walk S_n and sum its negative tail.  Exact, O(n) per step.
* :class:`ErrorPathSweep` advances many states at once through the recurrence
  for P(S_n = 0) and the step identity e_n - e_{n+1} = |delta| P(S_n = 0).
  O(1) per step and state; this is what the grid searches use.

The two are cross-checked in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist_core import TrinomialWalk, WalkStepper, ZeroMassRecurrence
from .errors import DomainError

__all__ = [
    "BernoulliState",
    "DesignContext",
    "ErrorProbEvaluator",
    "ErrorPathSweep",
    "error_prob",
    "tie_prob",
    "exact_identity_gap",
    "hoeffding_error_bound",
    "walk_for",
    "step_coefficients",
]


@dataclass(frozen=True)
class BernoulliState:
    """Success probabilities of the treated (mu1) and control (mu0) arms."""

    mu1: float
    mu0: float

    def __post_init__(self):
        for name, v in (("mu1", self.mu1), ("mu0", self.mu0)):
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")

    @classmethod
    def from_centered(cls, mid: float, half_gap: float) -> "BernoulliState":
        return cls(mid + half_gap, mid - half_gap)

    @property
    def tau(self) -> float:
        return self.mu1 - self.mu0

    @property
    def mid(self) -> float:
        return 0.5 * (self.mu1 + self.mu0)

    @property
    def half_gap(self) -> float:
        return 0.5 * (self.mu1 - self.mu0)

    @property
    def q(self) -> float:
        return self.mid * (1.0 - self.mid)

    @property
    def on_diagonal(self) -> bool:
        return self.mu1 == self.mu0

    def mirrored(self) -> "BernoulliState":
        return BernoulliState(self.mu0, self.mu1)

    def check_consistency(self, tol: float = 1e-12) -> bool:
        return (abs(self.mid + self.half_gap - self.mu1) <= tol
                and abs(self.mid - self.half_gap - self.mu0) <= tol)


@dataclass(frozen=True)
class DesignContext:
    """Population size N and experimental size m (both even, 0 <= m <= N)."""

    N: int
    m: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N <= 0 or self.N % 2:
            raise DomainError(f"population size must be a positive even integer, got {self.N!r}")
        if int(self.m) != self.m or self.m % 2:
            raise DomainError(f"experimental size must be an even integer, got {self.m!r}")
        if not (0 <= self.m <= self.N):
            raise DomainError(f"experimental size {self.m} outside [0, {self.N}]")

    @property
    def n(self) -> int:
        return self.m // 2

    def with_m(self, m: int) -> "DesignContext":
        return DesignContext(self.N, m)


def walk_for(state: BernoulliState, n: int) -> TrinomialWalk:
    return TrinomialWalk.from_means(state.mu1, state.mu0, n)


def _tail_error(pmf: np.ndarray, n: int, treated_better: bool) -> float:
    # pmf index i <-> k = i - n
    if treated_better:
        tail = math.fsum(pmf[:n])
    else:
        tail = math.fsum(pmf[n + 1:])
    return tail + 0.5 * float(pmf[n])


def error_prob(ctx: DesignContext, s: BernoulliState) -> float:
    """Tie-adjusted probability that the empirical success rule rolls out the worse arm.

    m = 0 and mu1 = mu0 both return 1/2: with no data, or no difference,
    the rule splits the rollout.
    """
    if ctx.m == 0 or s.on_diagonal:
        return 0.5
    walk = walk_for(s, ctx.n)
    stepper = WalkStepper(walk.a, walk.b, walk.c, walk.n)
    stepper.advance_to(walk.n)
    return _tail_error(stepper.pmf, ctx.n, s.mu1 > s.mu0)


def tie_prob(ctx: DesignContext, s: BernoulliState) -> float:
    """P(S_n = 0): both arms record the same number of successes."""
    if ctx.m < 2:
        raise DomainError("tie probability needs m >= 2")
    walk = walk_for(s, ctx.n)
    stepper = WalkStepper(walk.a, walk.b, walk.c, walk.n)
    stepper.advance_to(walk.n)
    return stepper.mass_at(0)


class ErrorProbEvaluator:
    """Error and tie probabilities along consecutive even m for one state.

    Keeps the walk DP buffer between calls; single owner only.
    """

    def __init__(self, state: BernoulliState, n_max: int):
        self.state = state
        walk = walk_for(state, 0)
        self._stepper = WalkStepper(walk.a, walk.b, walk.c, n_max)

    @property
    def m(self) -> int:
        return 2 * self._stepper.n

    def advance_to_m(self, m: int) -> None:
        if m % 2:
            raise DomainError(f"experimental size must be even, got {m}")
        if m < self.m:
            raise DomainError("evaluator only moves forward in m")
        self._stepper.advance_to(m // 2)

    def advance(self) -> None:
        self._stepper.advance()

    def error_prob(self) -> float:
        if self._stepper.n == 0 or self.state.on_diagonal:
            return 0.5
        n = self._stepper.n
        return _tail_error(self._stepper.pmf, n, self.state.mu1 > self.state.mu0)

    def tie_prob(self) -> float:
        return self._stepper.mass_at(0)


def exact_identity_gap(ctx: DesignContext, s: BernoulliState) -> tuple[float, float]:
    """Both sides of e(m) - e(m+2) = |delta| * P(S_n = 0).

    The absolute half-gap keeps the identity valid for mu1 < mu0, where e
    is defined by the mirrored branch.
    """
    if ctx.m < 2:
        raise DomainError("identity check needs m >= 2")
    if ctx.m + 2 > ctx.N:
        raise DomainError(f"identity check needs m + 2 <= N (m={ctx.m}, N={ctx.N})")
    ev = ErrorProbEvaluator(s, ctx.n + 1)
    ev.advance_to_m(ctx.m)
    e_m = ev.error_prob()
    tie = ev.tie_prob()
    ev.advance()
    e_next = ev.error_prob()
    return e_m - e_next, abs(s.half_gap) * tie


def hoeffding_error_bound(ctx: DesignContext, s: BernoulliState) -> float:
    """exp(-m tau^2 / 4), an upper bound on :func:`error_prob`."""
    if ctx.m < 2:
        raise DomainError("Hoeffding bound needs m >= 2")
    return math.exp(-ctx.m * s.tau * s.tau / 4.0)


def step_coefficients(mu1, mu0, one_minus_mu1=None, one_minus_mu0=None):
    """(b, b^2 - 4ac, |delta|) for arrays of means.

    Written through p = mu1*mu0 and r = (1-mu1)(1-mu0) so that swapping the
    arms or relabelling success/failure permutes operands of commutative
    operations only; values along a symmetry orbit come out bitwise equal
    whenever 1 - mu is exact (grid values k/K).
    """
    mu1 = np.asarray(mu1, dtype=float)
    mu0 = np.asarray(mu0, dtype=float)
    w1 = 1.0 - mu1 if one_minus_mu1 is None else np.asarray(one_minus_mu1, dtype=float)
    w0 = 1.0 - mu0 if one_minus_mu0 is None else np.asarray(one_minus_mu0, dtype=float)
    p = mu1 * mu0
    r = w1 * w0
    b = p + r
    disc = (r - p) * (r - p)
    half_gap = np.abs(mu1 - mu0) * 0.5
    return b, disc, half_gap


class ErrorPathSweep:
    """Vectorised e_n and P(S_n = 0) for many states, advanced one pair at a time.

    Attributes after ``k`` calls to :meth:`advance`: ``n == k``,
    ``error`` holds e(2k, .) and ``tie`` holds P(S_k = 0).
    """

    def __init__(self, mu1, mu0, one_minus_mu1=None, one_minus_mu0=None, half_gap=None):
        b, disc, hg = step_coefficients(mu1, mu0, one_minus_mu1, one_minus_mu0)
        self.half_gap = hg if half_gap is None else np.asarray(half_gap, dtype=float)
        self._zero = ZeroMassRecurrence(b, disc)
        self.error = np.full(b.shape, 0.5)

    @property
    def n(self) -> int:
        return self._zero.n

    @property
    def tie(self) -> np.ndarray:
        return self._zero.cur

    def advance(self) -> None:
        self.error = self.error - self.half_gap * self._zero.cur
        self._zero.advance()

    def advance_to(self, n: int) -> None:
        while self._zero.n < n:
            self.advance()

    def take(self, mask) -> "ErrorPathSweep":
        out = ErrorPathSweep.__new__(ErrorPathSweep)
        out.half_gap = self.half_gap[mask]
        out._zero = self._zero.take(mask)
        out.error = self.error[mask]
        return out
