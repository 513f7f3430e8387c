"""Closed-form test-and-roll quantities for Gaussian outcomes with known common variance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .dist_core import normal_cdf, normal_pdf
from .errors import DomainError

__all__ = [
    "GaussianState",
    "LimitCurve",
    "WmbThreshold",
    "gaussian_error_prob",
    "limit_curve_value",
    "limit_curve_derivative",
    "limit_curve_sup",
    "gaussian_marginal_ratio",
    "gaussian_wmb_threshold",
]


@dataclass(frozen=True)
class GaussianState:
    """Only the effect tau = mu1 - mu0 and the common sd enter any formula here."""

    tau: float
    sigma: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.tau):
            raise DomainError(f"tau must be finite, got {self.tau!r}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma!r}")


@dataclass(frozen=True)
class LimitCurve:
    """f_k(t) = 2 Phi(-t) + k t phi(t), with k = (N - m) / m."""

    k: float

    def __post_init__(self):
        if not (self.k >= 0.0):
            raise DomainError(f"k must be nonnegative, got {self.k!r}")

    @classmethod
    def for_sizes(cls, N: float, m: float) -> "LimitCurve":
        if not (0.0 < m <= N):
            raise DomainError(f"need 0 < m <= N, got m={m!r}, N={N!r}")
        return cls((N - m) / m)


class WmbThreshold(NamedTuple):
    continuous: float
    even: int


def _standardized_effect(m: float, s: GaussianState) -> float:
    if not (m > 0.0):
        raise DomainError(f"experimental size must be positive, got {m!r}")
    return math.sqrt(m) * abs(s.tau) / (2.0 * s.sigma)


def gaussian_error_prob(m: float, s: GaussianState) -> float:
    """Phi(-sqrt(m) |tau| / (2 sigma))."""
    return normal_cdf(-_standardized_effect(m, s))


def limit_curve_value(curve: LimitCurve, t: float) -> float:
    if not (t >= 0.0):
        raise DomainError(f"t must be nonnegative, got {t!r}")
    return 2.0 * normal_cdf(-t) + curve.k * t * normal_pdf(t)


def limit_curve_derivative(curve: LimitCurve, t: float) -> float:
    return normal_pdf(t) * (-2.0 + curve.k * (1.0 - t * t))


def limit_curve_sup(curve: LimitCurve) -> tuple[float, float]:
    """(sup_t f_k(t), argmax); the maximiser is interior only when k > 2."""
    if curve.k <= 2.0:
        return 1.0, 0.0
    t_star = math.sqrt(1.0 - 2.0 / curve.k)
    return limit_curve_value(curve, t_star), t_star


def gaussian_marginal_ratio(N: float, m: float, s: GaussianState) -> float:
    """Continuous-relaxation ratio -dR/dm over dC/dm, equal to f_k(t)."""
    curve = LimitCurve.for_sizes(N, m)
    return limit_curve_value(curve, _standardized_effect(m, s))


def gaussian_wmb_threshold(N: float) -> WmbThreshold:
    """N/3, plus the smallest even integer not below it."""
    if not (N > 0):
        raise DomainError(f"population size must be positive, got {N!r}")
    # exact integer ceil of N/3 when N is integral, avoiding 1000/3 float noise
    if float(N).is_integer():
        ceil3 = -(-int(N) // 3)
    else:
        ceil3 = math.ceil(N / 3.0)
    even = ceil3 + (ceil3 % 2)
    return WmbThreshold(N / 3.0, even)
