"""Distribution primitives for the matched-pairs difference walk.

The experiment is summarised by ``S_n = sum_j W_j`` where each pair
difference ``W_j = X_j - Z_j`` takes values in {+1, 0, -1} with
probabilities ``(a, b, c)``.  Everything here is plain float64 numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedRepresentationError

__all__ = [
    "BinomialPmf",
    "TrinomialWalk",
    "TiltedWalk",
    "WalkStepper",
    "ZeroMassRecurrence",
    "binomial_pmf",
    "walk_pmf",
    "walk_pmf_tilted",
    "lazy_walk_zero_mass",
    "normal_cdf",
    "normal_pdf",
]

_SUM_TOL = 1e-14
_EXTREME_P = 1e-8


@dataclass(frozen=True)
class BinomialPmf:
    n: int
    p: float
    mass: np.ndarray

    def __getitem__(self, k: int) -> float:
        return float(self.mass[k])


def binomial_pmf(n: int, p: float) -> BinomialPmf:
    """Full Binomial(n, p) mass vector, index k = P(X = k).

    Moderate p uses a multiplicative recurrence started from the mode, so
    no entry is formed by exponentiating a large log; p within 1e-8 of the
    boundary falls back to log space where interior masses would underflow.
    """
    if n < 0 or int(n) != n:
        raise DomainError(f"trial count must be a nonnegative integer, got {n!r}")
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"success probability must lie in [0, 1], got {p!r}")
    n = int(n)
    if p == 0.0 or p == 1.0:
        mass = np.zeros(n + 1)
        mass[0 if p == 0.0 else n] = 1.0
        return BinomialPmf(n, float(p), mass)
    k = np.arange(n + 1)
    if p < _EXTREME_P or p > 1.0 - _EXTREME_P:
        logm = (special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)
                + k * math.log(p) + (n - k) * math.log1p(-p))
        mass = np.exp(logm)
    else:
        mode = min(n, int((n + 1) * p))
        log_mode = (math.lgamma(n + 1) - math.lgamma(mode + 1) - math.lgamma(n - mode + 1)
                    + mode * math.log(p) + (n - mode) * math.log1p(-p))
        odds = p / (1.0 - p)
        mass = np.empty(n + 1)
        mass[mode] = 1.0
        # ratios P(k+1)/P(k) = (n-k)/(k+1) * odds, accumulated outward from the mode
        up = (n - k[mode:n]) / (k[mode:n] + 1.0) * odds
        mass[mode + 1:] = np.cumprod(up)
        down = (k[1:mode + 1]) / (n - k[1:mode + 1] + 1.0) / odds
        mass[:mode] = np.cumprod(down[::-1])[::-1]
        mass *= math.exp(log_mode)
    return BinomialPmf(n, float(p), mass)


@dataclass(frozen=True)
class TrinomialWalk:
    """Step law P(W=+1)=a, P(W=0)=b, P(W=-1)=c of the pair difference, run for n steps."""

    a: float
    b: float
    c: float
    n: int

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0.0:
            raise DomainError(f"negative step probability in {(self.a, self.b, self.c)}")
        if abs(self.a + self.b + self.c - 1.0) > _SUM_TOL:
            raise DomainError(f"step probabilities sum to {self.a + self.b + self.c!r}, not 1")
        if self.n < 0 or int(self.n) != self.n:
            raise DomainError(f"step count must be a nonnegative integer, got {self.n!r}")

    @classmethod
    def from_means(cls, mu1: float, mu0: float, n: int) -> "TrinomialWalk":
        a = mu1 * (1.0 - mu0)
        c = mu0 * (1.0 - mu1)
        b = mu1 * mu0 + (1.0 - mu1) * (1.0 - mu0)
        return cls(a, b, c, n)

    @classmethod
    def from_centered(cls, mu: float, delta: float, n: int) -> "TrinomialWalk":
        q = mu * (1.0 - mu)
        return cls(q + delta + delta * delta, 1.0 - 2.0 * q - 2.0 * delta * delta,
                   q - delta + delta * delta, n)

    @property
    def is_boundary(self) -> bool:
        return self.a == 0.0 or self.c == 0.0

    def mirrored(self) -> "TrinomialWalk":
        return TrinomialWalk(self.c, self.b, self.a, self.n)


@dataclass(frozen=True)
class TiltedWalk:
    """Change of measure onto the symmetric lazy walk: P(S_n=k) = lambda^n r^k p~_n(k)."""

    u: float
    lam: float
    r: float
    q_tilde: float

    @classmethod
    def from_walk(cls, walk: TrinomialWalk) -> "TiltedWalk":
        if walk.is_boundary:
            raise UnsupportedRepresentationError(
                "tilted representation needs a > 0 and c > 0 (interior walk)")
        u = math.sqrt(walk.a * walk.c)
        lam = walk.b + 2.0 * u
        return cls(u=u, lam=lam, r=math.sqrt(walk.a / walk.c), q_tilde=u / lam)


class WalkStepper:
    """Rolling DP over the distribution of S_n, one step at a time.

    Holds a single buffer sized for ``n_max`` steps, so consecutive n cost
    O(n) each.  Not shareable between threads.
    """

    def __init__(self, a: float, b: float, c: float, n_max: int):
        self.a, self.b, self.c = float(a), float(b), float(c)
        self.n_max = int(n_max)
        self.n = 0
        size = 2 * self.n_max + 3  # one zero pad on each side
        self._cur = np.zeros(size)
        self._nxt = np.zeros(size)
        self._center = self.n_max + 1
        self._cur[self._center] = 1.0

    def advance(self) -> None:
        if self.n >= self.n_max:
            raise DomainError(f"walk stepper exhausted at n_max={self.n_max}")
        lo = self._center - self.n - 1
        hi = self._center + self.n + 2
        cur, nxt = self._cur, self._nxt
        # pair the +1/-1 contributions first so the (a, c) <-> (c, a) mirror is bitwise exact
        side = self.a * cur[lo - 1:hi - 1] + self.c * cur[lo + 1:hi + 1]
        nxt[lo:hi] = self.b * cur[lo:hi] + side
        self._cur, self._nxt = nxt, cur
        self.n += 1

    def advance_to(self, n: int) -> None:
        while self.n < n:
            self.advance()

    @property
    def pmf(self) -> np.ndarray:
        """View of P(S_n = k) for k = -n..n (do not mutate)."""
        return self._cur[self._center - self.n:self._center + self.n + 1]

    def mass_at(self, k: int) -> float:
        if abs(k) > self.n:
            return 0.0
        return float(self._cur[self._center + k])


def walk_pmf(walk: TrinomialWalk) -> np.ndarray:
    """P(S_n = k) for k = -n..n by dynamic programming."""
    stepper = WalkStepper(walk.a, walk.b, walk.c, walk.n)
    stepper.advance_to(walk.n)
    return stepper.pmf.copy()


def _lazy_walk_pmf(theta: float, n: int) -> np.ndarray:
    stepper = WalkStepper(theta, 1.0 - 2.0 * theta, theta, n)
    stepper.advance_to(n)
    return stepper.pmf.copy()


def walk_pmf_tilted(walk: TrinomialWalk, tilt: TiltedWalk | None = None) -> np.ndarray:
    """Same vector as :func:`walk_pmf`, rebuilt from the symmetric lazy walk."""
    if walk.is_boundary:
        raise UnsupportedRepresentationError(
            "tilted representation needs a > 0 and c > 0 (interior walk)")
    if tilt is None:
        tilt = TiltedWalk.from_walk(walk)
    n = walk.n
    lazy = _lazy_walk_pmf(tilt.q_tilde, n)
    k = np.arange(-n, n + 1)
    log_factor = n * math.log(tilt.lam) + k * math.log(tilt.r)
    # combine in log space: r^k alone overflows for lopsided walks at n ~ 500
    with np.errstate(divide="ignore"):
        log_lazy = np.log(lazy)
    return np.exp(log_lazy + log_factor)


def lazy_walk_zero_mass(theta: float, n: int) -> float:
    """P(symmetric lazy walk sits at 0 after n steps), steps +-1 w.p. theta each."""
    if not (0.0 < theta < 0.5):
        raise DomainError(f"theta must lie in (0, 1/2), got {theta!r}")
    if n < 1:
        raise DomainError(f"step count must be >= 1, got {n!r}")
    stepper = WalkStepper(theta, 1.0 - 2.0 * theta, theta, n)
    stepper.advance_to(n)
    return stepper.mass_at(0)


class ZeroMassRecurrence:
    """P(S_n = 0) for many walks at once via the central trinomial recurrence.

        (n+1) T_{n+1} = (2n+1) b T_n - n (b^2 - 4ac) T_{n-1},   T_0 = 1, T_1 = b.

    O(1) per step and walk, against O(n) for the full DP.  ``disc`` is
    b^2 - 4ac; callers that know a cancellation-free form should pass it.
    """

    def __init__(self, b, disc):
        self.b = np.asarray(b, dtype=float)
        self.disc = np.asarray(disc, dtype=float)
        self.n = 0
        self.prev = np.zeros_like(self.b)
        self.cur = np.ones_like(self.b)

    def advance(self) -> None:
        n = self.n
        nxt = ((2 * n + 1) * self.b * self.cur - n * self.disc * self.prev) / (n + 1)
        self.prev, self.cur = self.cur, nxt
        self.n = n + 1

    def take(self, mask) -> "ZeroMassRecurrence":
        """Sub-recurrence restricted to ``mask`` (boolean or index array)."""
        out = ZeroMassRecurrence.__new__(ZeroMassRecurrence)
        out.b, out.disc = self.b[mask], self.disc[mask]
        out.n = self.n
        out.prev, out.cur = self.prev[mask], self.cur[mask]
        return out


def _check_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("normal distribution functions need finite arguments")
    return arr


def normal_cdf(x):
    """Standard normal CDF through the complementary error function."""
    arr = _check_finite(x)
    out = 0.5 * special.erfc(-arr / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def normal_pdf(x):
    arr = _check_finite(x)
    out = np.exp(-0.5 * arr * arr) / math.sqrt(2.0 * math.pi)
    return float(out) if out.ndim == 0 else out
