"""Simulation oracle for the exact error, regret and welfare computations.

Replications are split into fixed-size batches.  Batch ``i`` draws from a
Philox stream seeded by child ``i`` of ``SeedSequence(seed)``, so the
estimate depends only on (seed, config) and never on how batches are
scheduled across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .bernoulli_model import BernoulliState, DesignContext
from .errors import ConfigurationError, DomainError
from .gaussian_model import GaussianState

__all__ = ["SimConfig", "SimEstimate", "simulate_error_prob", "simulate_regret"]

Model = Union[BernoulliState, GaussianState]

DEFAULT_BATCH = 50_000


@dataclass(frozen=True)
class SimConfig:
    replications: int
    seed: int
    model: Model
    ctx: DesignContext
    batch_size: int = DEFAULT_BATCH
    workers: int = 1

    def __post_init__(self):
        if int(self.replications) != self.replications or self.replications < 1:
            raise ConfigurationError(f"replications must be a positive integer, got {self.replications!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise ConfigurationError(f"seed must be a 64-bit nonnegative integer, got {self.seed!r}")
        if self.batch_size < 1 or self.workers < 1:
            raise ConfigurationError("batch_size and workers must be positive")
        if not isinstance(self.model, (BernoulliState, GaussianState)):
            raise ConfigurationError(f"unsupported model {type(self.model).__name__}")

    def batch_sizes(self) -> list[int]:
        full, rest = divmod(int(self.replications), self.batch_size)
        return [self.batch_size] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    replications: int


def _run(cfg: SimConfig, draw: Callable[[np.random.Generator, int], np.ndarray]) -> SimEstimate:
    sizes = cfg.batch_sizes()
    children = np.random.SeedSequence(int(cfg.seed)).spawn(len(sizes))

    def batch(i: int) -> tuple[float, float]:
        rng = np.random.Generator(np.random.Philox(children[i]))
        x = np.asarray(draw(rng, sizes[i]), dtype=float)
        return math.fsum(x), math.fsum(x * x)

    if cfg.workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(batch, range(len(sizes))))
    else:
        parts = [batch(i) for i in range(len(sizes))]
    # count-weighted merge, always in batch order
    R = int(cfg.replications)
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / R
    if R == 1:
        return SimEstimate(mean, 0.0, R)
    var = max(0.0, (total_sq - R * mean * mean) / (R - 1))
    return SimEstimate(mean, math.sqrt(var / R), R)


def _bernoulli_counts(rng, s: BernoulliState, n: int, size: int):
    return rng.binomial(n, s.mu1, size), rng.binomial(n, s.mu0, size)


def _error_indicator(x, z, treated_better: bool):
    wrong = (x < z) if treated_better else (x > z)
    return wrong + 0.5 * (x == z)


def _gaussian_difference(rng, s: GaussianState, n: int, size: int):
    # difference of arm means, each over n draws with sd sigma
    return rng.normal(s.tau, s.sigma * math.sqrt(2.0 / n), size)


def simulate_error_prob(cfg: SimConfig) -> SimEstimate:
    """Estimate e(m): fraction of experiments whose rule picks the worse arm, ties counted 1/2."""
    n = cfg.ctx.n
    if cfg.ctx.m < 2:
        raise DomainError("error simulation needs m >= 2")
    s = cfg.model
    if isinstance(s, BernoulliState):
        better = s.mu1 >= s.mu0

        def draw(rng, size):
            x, z = _bernoulli_counts(rng, s, n, size)
            return _error_indicator(x, z, better)
    else:
        better = s.tau >= 0.0

        def draw(rng, size):
            d = _gaussian_difference(rng, s, n, size)
            return _error_indicator(d, 0.0, better)
    return _run(cfg, draw)


def simulate_regret(cfg: SimConfig) -> SimEstimate:
    """Estimate regret as oracle welfare minus realised welfare of experiment plus rollout.

    Rollout units get fresh i.i.d. outcomes; on a tie (always at m = 0) the
    rollout is split evenly between the arms.
    """
    N, m, n = cfg.ctx.N, cfg.ctx.m, cfg.ctx.n
    rest = N - m
    s = cfg.model
    if isinstance(s, BernoulliState):
        mu1, mu0 = s.mu1, s.mu0
        oracle = N * max(mu1, mu0)

        def draw(rng, size):
            if n:
                x, z = _bernoulli_counts(rng, s, n, size)
            else:
                x = z = np.zeros(size, dtype=np.int64)
            treat = x > z
            tie = x == z
            half = rest // 2
            roll = np.where(treat, rng.binomial(rest, mu1, size), rng.binomial(rest, mu0, size))
            split = rng.binomial(half, mu1, size) + rng.binomial(rest - half, mu0, size)
            roll = np.where(tie, split, roll)
            return oracle - (x + z + roll)
    else:
        tau, sigma = s.tau, s.sigma
        oracle = N * max(tau, 0.0)

        def draw(rng, size):
            # arm means (tau, 0); sums of normal outcomes drawn directly
            if n:
                x = rng.normal(n * tau, sigma * math.sqrt(n), size)
                z = rng.normal(0.0, sigma * math.sqrt(n), size)
            else:
                x = z = np.zeros(size)
            half = rest // 2
            roll_treat = rng.normal(rest * tau, sigma * math.sqrt(rest), size) if rest else np.zeros(size)
            roll_ctrl = rng.normal(0.0, sigma * math.sqrt(rest), size) if rest else np.zeros(size)
            split = (rng.normal(half * tau, sigma * math.sqrt(half), size) if half else np.zeros(size)) + \
                (rng.normal(0.0, sigma * math.sqrt(rest - half), size) if rest - half else np.zeros(size))
            roll = np.where(x > z, roll_treat, np.where(x == z, split, roll_ctrl))
            return oracle - (x + z + roll)
    return _run(cfg, draw)
