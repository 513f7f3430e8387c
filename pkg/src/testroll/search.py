"""Worst-case search over the Bernoulli state space and sample-size selection.

Every search enumerates a finite grid of states and advances all of them
together through :class:`~testroll.bernoulli_model.ErrorPathSweep`, so a
full scan over m = 0, 2, ..., N costs O(N) per state.  Grid states are kept
in lexicographic (mu1, mu0) order and every max-reduction breaks ties by
the smallest global index, which makes results independent of how the grid
is split across workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .bernoulli_model import BernoulliState, DesignContext, ErrorPathSweep
from .criteria import hoeffding_wmb_cap, regret_batch, relative_regret_batch, wmb_ratio_batch
from .errors import ConfigurationError, DomainError, TestRollError
from .gaussian_model import gaussian_wmb_threshold

__all__ = [
    "GridSpec",
    "SearchConfig",
    "GridPoints",
    "LocalRegion",
    "TraceEntry",
    "WorstCaseResult",
    "DesignRecommendation",
    "LocalizationRow",
    "PruningError",
    "PRUNE_SLACK",
    "worst_case_regret",
    "worst_case_relative_regret",
    "worst_case_wmb",
    "minimax_sample_size",
    "relative_regret_sample_size",
    "wmb_sample_size",
    "wmb_sample_size_na",
    "gaussian_wmb_sample_size",
    "localization_diagnostic",
    "localization_bound",
    "localization_from_trace",
]

log = logging.getLogger(__name__)

PRUNE_SLACK = 0.999
_INDEX_TOL = 1e-9


class PruningError(TestRollError):
    """Debug verification found a pruned state above the reported maximum."""


@dataclass(frozen=True)
class GridSpec:
    """Grid of states k*step inside ``bounds`` = (mu1_lo, mu1_hi, mu0_lo, mu0_hi)."""

    step: float = 0.01
    include_diagonal: bool = True
    min_gap: float = 0.0
    bounds: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    diagonal_only: bool = False

    def __post_init__(self):
        if not (0.0 < self.step <= 0.5):
            raise ConfigurationError(f"grid step must lie in (0, 0.5], got {self.step!r}")
        if self.min_gap < 0.0:
            raise ConfigurationError(f"min_gap must be nonnegative, got {self.min_gap!r}")
        lo1, hi1, lo0, hi0 = self.bounds
        if not (0.0 <= lo1 <= hi1 <= 1.0 and 0.0 <= lo0 <= hi0 <= 1.0):
            raise ConfigurationError(f"bounds must be a sub-rectangle of [0,1]^2, got {self.bounds!r}")
        if self.diagonal_only and (self.min_gap > 0.0 or not self.include_diagonal):
            raise ConfigurationError("a diagonal-only grid cannot exclude the diagonal")

    @classmethod
    def wmb(cls, epsilon: float) -> "GridSpec":
        """Off-diagonal grid with spacing epsilon and |mu1 - mu0| >= epsilon."""
        return cls(step=epsilon, include_diagonal=False, min_gap=epsilon)

    @property
    def denominator(self) -> int | None:
        """K with step == 1/K, when the grid sits on exact fractions k/K."""
        K = round(1.0 / self.step)
        return K if abs(K * self.step - 1.0) < _INDEX_TOL else None

    def points(self) -> "GridPoints":
        return GridPoints.build(self)


def _axis(lo: float, hi: float, step: float, K: int | None):
    if K is not None:
        i = np.arange(math.ceil(lo * K - _INDEX_TOL), math.floor(hi * K + _INDEX_TOL) + 1)
        return i, i / K, (K - i) / K
    i = np.arange(math.ceil(lo / step - _INDEX_TOL), math.floor(hi / step + _INDEX_TOL) + 1)
    vals = np.minimum(i * step, 1.0)
    return i, vals, 1.0 - vals


@dataclass
class GridPoints:
    """Flat arrays of grid states in lexicographic (mu1, mu0) order."""

    mu1: np.ndarray
    mu0: np.ndarray
    one_minus_mu1: np.ndarray
    one_minus_mu0: np.ndarray
    gap: np.ndarray

    @classmethod
    def build(cls, spec: GridSpec) -> "GridPoints":
        K = spec.denominator
        lo1, hi1, lo0, hi0 = spec.bounds
        i1, v1, w1 = _axis(lo1, hi1, spec.step, K)
        i0, v0, w0 = _axis(lo0, hi0, spec.step, K)
        I1, I0 = np.meshgrid(i1, i0, indexing="ij")
        V1, V0 = np.meshgrid(v1, v0, indexing="ij")
        W1, W0 = np.meshgrid(w1, w0, indexing="ij")
        units = np.abs(I1 - I0)
        if K is not None:
            gap = units / K
            keep = units >= spec.min_gap * K - _INDEX_TOL
        else:
            gap = np.abs(V1 - V0)
            keep = gap >= spec.min_gap - 1e-12
        if spec.diagonal_only:
            keep &= units == 0
        elif not spec.include_diagonal:
            keep &= units > 0
        return cls(V1[keep], V0[keep], W1[keep], W0[keep], gap[keep])

    @classmethod
    def from_arrays(cls, mu1, mu0) -> "GridPoints":
        mu1 = np.asarray(mu1, dtype=float)
        mu0 = np.asarray(mu0, dtype=float)
        return cls(mu1, mu0, 1.0 - mu1, 1.0 - mu0, np.abs(mu1 - mu0))

    def __len__(self) -> int:
        return int(self.mu1.size)

    def subset(self, sel) -> "GridPoints":
        return GridPoints(self.mu1[sel], self.mu0[sel], self.one_minus_mu1[sel],
                          self.one_minus_mu0[sel], self.gap[sel])

    def sweep(self, sel=None) -> ErrorPathSweep:
        if sel is None:
            sel = slice(None)
        return ErrorPathSweep(self.mu1[sel], self.mu0[sel],
                              self.one_minus_mu1[sel], self.one_minus_mu0[sel],
                              0.5 * self.gap[sel])

    def state(self, i: int) -> BernoulliState:
        return BernoulliState(float(self.mu1[i]), float(self.mu0[i]))


@dataclass(frozen=True)
class SearchConfig:
    refine: bool = True
    refine_step: float = 1e-4
    refine_window: float = 0.02
    prune: bool = True
    bisect: bool = False
    workers: int = 1
    debug_pruning: bool = False
    full_trace: bool = False

    def __post_init__(self):
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers!r}")
        if not (0.0 < self.refine_step < 1.0) or self.refine_window < 0.0:
            raise ConfigurationError("refinement step must lie in (0, 1) and window be >= 0")


@dataclass(frozen=True)
class LocalRegion:
    """Interior, near-diagonal states: mid in [kappa, 1-kappa], 0 < delta <= K sqrt(log N / N)."""

    kappa: float
    big_k: float
    N: int

    def __post_init__(self):
        if not (0.0 < self.kappa < 0.5):
            raise ConfigurationError(f"kappa must lie in (0, 1/2), got {self.kappa!r}")
        if not (self.big_k > 0.0):
            raise ConfigurationError(f"K must be positive, got {self.big_k!r}")

    @property
    def max_half_gap(self) -> float:
        return self.big_k * math.sqrt(math.log(self.N) / self.N)

    def states(self, n_mid: int = 20, n_gap: int = 20) -> list[BernoulliState]:
        mids = np.linspace(self.kappa, 1.0 - self.kappa, n_mid)
        gaps = self.max_half_gap * np.arange(1, n_gap + 1) / n_gap
        out = []
        for mid in mids:
            for d in gaps:
                if 0.0 <= mid - d and mid + d <= 1.0:
                    out.append(BernoulliState.from_centered(float(mid), float(d)))
        return out


@dataclass(frozen=True)
class TraceEntry:
    m: int
    worst_value: float
    mu1: float
    mu0: float
    states_evaluated: int = 0
    states_pruned: int = 0
    refined: bool = False

    @property
    def argmax(self) -> BernoulliState:
        return BernoulliState(self.mu1, self.mu0)


@dataclass(frozen=True)
class WorstCaseResult:
    m: int
    value: float
    argmax_state: BernoulliState
    states_evaluated: int
    states_pruned: int = 0


@dataclass
class DesignRecommendation:
    criterion: str
    N: int
    m_star: int | None
    feasible: bool = True
    least_favorable: BernoulliState | None = None
    value: float | None = None
    trace: list[TraceEntry] = field(default_factory=list)
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def fraction(self) -> float | None:
        return None if self.m_star is None else self.m_star / self.N

    def to_dict(self) -> dict:
        lf = self.least_favorable
        out = {
            "criterion": self.criterion,
            "N": self.N,
            "mStar": self.m_star,
            "fraction": self.fraction,
            "feasible": self.feasible,
            "leastFavorable": None if lf is None else {"mu1": lf.mu1, "mu0": lf.mu0},
            "value": self.value,
            "degenerate": self.degenerate,
            "trace": [
                {"m": t.m, "worstValue": t.worst_value,
                 "argmax": {"mu1": t.mu1, "mu0": t.mu0},
                 "statesEvaluated": t.states_evaluated, "statesPruned": t.states_pruned,
                 "refined": t.refined}
                for t in self.trace
            ],
        }
        out.update(self.extra)
        return out


# --- sweep engine --------------------------------------------------------------------

def _retire_mask(gap, N: int, m: int):
    """States the Hoeffding cap excludes at m: tau^2 > 4 log N / m and cap <= slack."""
    if m <= 0:
        return np.zeros(np.shape(gap), dtype=bool)
    g2 = np.asarray(gap) ** 2
    return (g2 > 4.0 * math.log(N) / m) & (hoeffding_wmb_cap(N, m, gap) <= PRUNE_SLACK)


def _objective(kind: str, N: int, m: int, sweep: ErrorPathSweep, gap, best_mean):
    if kind == "wmb":
        return wmb_ratio_batch(N, m, sweep.error, sweep.tie, sweep.half_gap)
    if kind == "regret":
        return regret_batch(N, m, gap, sweep.error)
    if kind == "rreg":
        return relative_regret_batch(N, m, gap, sweep.error, best_mean)
    raise ValueError(kind)


@dataclass
class _BlockTrace:
    value: np.ndarray
    index: np.ndarray
    live: np.ndarray
    pruned: np.ndarray
    retired_cap: np.ndarray
    retired_value: np.ndarray


def _scan_block(pts: GridPoints, sel: np.ndarray, N: int, n_last: int, kind: str,
                prune: bool, debug: bool) -> _BlockTrace:
    """Per-m best value and index over the states ``sel`` for n = 0..n_last."""
    sel = np.asarray(sel)
    if prune:
        # widest gaps first: the retired states always form a prefix
        sel = sel[np.argsort(-pts.gap[sel], kind="stable")]
    size = n_last + 1
    out = _BlockTrace(
        value=np.full(size, -np.inf), index=np.full(size, -1, dtype=np.int64),
        live=np.zeros(size, dtype=np.int64), pruned=np.zeros(size, dtype=np.int64),
        retired_cap=np.full(size, -np.inf), retired_value=np.full(size, -np.inf),
    )
    if sel.size == 0:
        return out
    sweep = pts.sweep(sel)
    gidx = sel
    gap = pts.gap[sel]
    best_mean = np.maximum(pts.mu1[sel], pts.mu0[sel])
    cut = 0          # states [0, cut) of the current arrays are retired
    dropped = 0      # retired states physically removed from the arrays
    last_cap_gap = None
    for n in range(size):
        m = 2 * n
        if prune and m > 0:
            cut = int(np.count_nonzero(_retire_mask(gap, N, m)))
            if cut and not debug:
                last_cap_gap = float(gap[cut - 1])
                sweep = sweep.take(slice(cut, None))
                gidx, gap, best_mean = gidx[cut:], gap[cut:], best_mean[cut:]
                dropped += cut
                cut = 0
        n_retired = dropped + cut
        vals = _objective(kind, N, m, sweep, gap, best_mean)
        live_vals = vals[cut:]
        if live_vals.size:
            top = live_vals.max()
            out.value[n] = top
            out.index[n] = gidx[cut:][live_vals == top].min()
        out.live[n] = live_vals.size
        out.pruned[n] = n_retired
        if n_retired:
            g = float(gap[cut - 1]) if cut else last_cap_gap
            out.retired_cap[n] = float(hoeffding_wmb_cap(N, m, g))
            if debug and cut:
                out.retired_value[n] = vals[:cut].max()
        if n < n_last:
            sweep.advance()
    return out


def _blocks(n_states: int, workers: int) -> list[np.ndarray]:
    workers = max(1, min(workers, n_states)) if n_states else 1
    return [b for b in np.array_split(np.arange(n_states), workers)]


def _parallel_scan(pts: GridPoints, N: int, n_last: int, kind: str, cfg: SearchConfig,
                   prune: bool = False) -> _BlockTrace:
    if len(pts) == 0:
        raise ConfigurationError("grid contains no states")
    blocks = _blocks(len(pts), cfg.workers)
    args = (N, n_last, kind, prune, cfg.debug_pruning)
    if len(blocks) == 1:
        parts = [_scan_block(pts, blocks[0], *args)]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(lambda b: _scan_block(pts, b, *args), blocks))
    merged = parts[0]
    for part in parts[1:]:
        better = (part.value > merged.value) | (
            (part.value == merged.value) & (part.index >= 0)
            & ((merged.index < 0) | (part.index < merged.index)))
        merged.value = np.where(better, part.value, merged.value)
        merged.index = np.where(better, part.index, merged.index)
        merged.live = merged.live + part.live
        merged.pruned = merged.pruned + part.pruned
        merged.retired_cap = np.maximum(merged.retired_cap, part.retired_cap)
        merged.retired_value = np.maximum(merged.retired_value, part.retired_value)
    if cfg.debug_pruning and prune:
        bad = merged.retired_value > merged.value
        if np.any(bad):
            n = int(np.argmax(bad))
            raise PruningError(
                f"pruned state with value {merged.retired_value[n]!r} exceeds maximum "
                f"{merged.value[n]!r} at m={2 * n}")
    return merged


def _values_at(pts: GridPoints, sel, N: int, m: int, kind: str) -> np.ndarray:
    """Objective at a single m for the states ``sel``."""
    sweep = pts.sweep(sel)
    sweep.advance_to(m // 2)
    best_mean = np.maximum(pts.mu1[sel], pts.mu0[sel])
    return _objective(kind, N, m, sweep, pts.gap[sel], best_mean)


def _best(values: np.ndarray, index: np.ndarray) -> tuple[float, int]:
    top = values.max()
    return float(top), int(index[values == top].min())


def _certify_wmb(pts: GridPoints, N: int, m: int, value: float, idx: int,
                 retired_cap: float) -> tuple[float, int]:
    """Re-admit pruned states whenever their cap is not below the reported maximum."""
    if not (retired_cap > value):
        return value, idx
    sel = np.flatnonzero(_retire_mask(pts.gap, N, m) & (hoeffding_wmb_cap(N, m, pts.gap) > value))
    if sel.size == 0:
        return value, idx
    vals = _values_at(pts, sel, N, m, "wmb")
    top, j = _best(vals, sel)
    if top > value or (top == value and j < idx):
        return top, j
    return value, idx


# --- worst case at a single m ------------------------------------------------------

def _check_ctx(N: int, m: int) -> DesignContext:
    return DesignContext(N, m)


def _refine(pts_coarse: GridPoints, N: int, m: int, center: BernoulliState, grid: GridSpec,
            cfg: SearchConfig, kind: str = "regret") -> tuple[float, BernoulliState, int]:
    lo1, hi1, lo0, hi0 = grid.bounds
    w = cfg.refine_window
    window = GridSpec(step=cfg.refine_step, include_diagonal=grid.include_diagonal,
                      min_gap=grid.min_gap, diagonal_only=grid.diagonal_only,
                      bounds=(max(lo1, center.mu1 - w), min(hi1, center.mu1 + w),
                              max(lo0, center.mu0 - w), min(hi0, center.mu0 + w)))
    fine = window.points()
    if kind == "rreg":
        fine = fine.subset(np.maximum(fine.mu1, fine.mu0) > 0.0)
    if len(fine) == 0:
        return -math.inf, center, 0
    vals = _values_at(fine, slice(None), N, m, kind)
    top, j = _best(vals, np.arange(len(fine)))
    return top, fine.state(j), len(fine)


def _lex_less(a: BernoulliState, b: BernoulliState) -> bool:
    return (a.mu1, a.mu0) < (b.mu1, b.mu0)


def _merge_refined(value, state, r_value, r_state):
    if r_value > value or (r_value == value and _lex_less(r_state, state)):
        return r_value, r_state
    return value, state


def worst_case_regret(ctx: DesignContext, grid: GridSpec, cfg: SearchConfig = SearchConfig()) -> WorstCaseResult:
    pts = grid.points()
    if len(pts) == 0:
        raise ConfigurationError("grid contains no states")
    vals = _values_at(pts, slice(None), ctx.N, ctx.m, "regret")
    value, j = _best(vals, np.arange(len(pts)))
    state = pts.state(j)
    evaluated = len(pts)
    if cfg.refine:
        r_value, r_state, n_fine = _refine(pts, ctx.N, ctx.m, state, grid, cfg)
        evaluated += n_fine
        value, state = _merge_refined(value, state, r_value, r_state)
    return WorstCaseResult(ctx.m, value, state, evaluated)


def worst_case_relative_regret(ctx: DesignContext, grid: GridSpec,
                               cfg: SearchConfig = SearchConfig()) -> WorstCaseResult:
    pts = grid.points()
    pts = pts.subset(np.maximum(pts.mu1, pts.mu0) > 0.0)
    if len(pts) == 0:
        raise ConfigurationError("grid contains no states with positive oracle welfare")
    vals = _values_at(pts, slice(None), ctx.N, ctx.m, "rreg")
    value, j = _best(vals, np.arange(len(pts)))
    return WorstCaseResult(ctx.m, value, pts.state(j), len(pts))


def worst_case_wmb(ctx: DesignContext, grid: GridSpec, cfg: SearchConfig = SearchConfig()) -> WorstCaseResult:
    """Grid maximum of the marginal ratio at one m, skipping states the Hoeffding cap rules out."""
    N, m = ctx.N, ctx.m
    if m > N - 2:
        raise DomainError(f"marginal ratio needs m <= N - 2 (m={m}, N={N})")
    pts = grid.points()
    if len(pts) == 0:
        raise ConfigurationError("grid contains no states")
    everything = np.arange(len(pts))
    if not cfg.prune:
        vals = _values_at(pts, everything, N, m, "wmb")
        value, j = _best(vals, everything)
        return WorstCaseResult(m, value, pts.state(j), len(pts), 0)
    retired = _retire_mask(pts.gap, N, m)
    live = np.flatnonzero(~retired)
    pruned = np.flatnonzero(retired)
    if live.size:
        vals = _values_at(pts, live, N, m, "wmb")
        value, j = _best(vals, live)
    else:
        value, j = -math.inf, -1
    evaluated = live.size
    # pruned states have eta <= cap <= slack; only those whose cap clears the maximum need a look
    caps = hoeffding_wmb_cap(N, m, pts.gap[pruned])
    recheck = pruned[caps > value]
    if recheck.size:
        vals = _values_at(pts, recheck, N, m, "wmb")
        top, jj = _best(vals, recheck)
        if top > value or (top == value and jj < j):
            value, j = top, jj
        evaluated += recheck.size
    if cfg.debug_pruning and pruned.size:
        vals = _values_at(pts, pruned, N, m, "wmb")
        if vals.max() > value:
            raise PruningError(f"pruned state with value {vals.max()!r} exceeds maximum {value!r} at m={m}")
    return WorstCaseResult(m, value, pts.state(j), int(evaluated), int(pruned.size - recheck.size))


# --- sample-size criteria ----------------------------------------------------------

def _require_even_N(N: int) -> None:
    if int(N) != N or N <= 0 or N % 2:
        raise DomainError(f"population size must be a positive even integer, got {N!r}")


def minimax_sample_size(N: int, grid: GridSpec | None = None,
                        cfg: SearchConfig = SearchConfig()) -> DesignRecommendation:
    """argmin over m in {0, 2, ..., N} of the grid worst-case regret.

    The coarse grid is swept for every m.  With refinement on, a fine window
    around each coarse maximiser can only raise the worst case, so windows
    are evaluated in increasing order of coarse value until the coarse value
    alone exceeds the best refined one; the result equals refining every m.
    ``cfg.full_trace`` refines every m anyway, for figure output.
    """
    _require_even_N(N)
    grid = grid or GridSpec()
    pts = grid.points()
    scan = _parallel_scan(pts, N, N // 2, "regret", cfg)
    trace = [TraceEntry(2 * n, float(scan.value[n]), float(pts.mu1[scan.index[n]]),
                        float(pts.mu0[scan.index[n]]), int(scan.live[n]))
             for n in range(N // 2 + 1)]
    if cfg.refine:
        best_value, best_m = math.inf, None
        for n in np.argsort(scan.value, kind="stable"):
            coarse = trace[n]
            if coarse.worst_value > best_value and not cfg.full_trace:
                break
            m = coarse.m
            r_value, r_state, n_fine = _refine(pts, N, m, coarse.argmax, grid, cfg)
            value, state = _merge_refined(coarse.worst_value, coarse.argmax, r_value, r_state)
            trace[n] = TraceEntry(m, value, state.mu1, state.mu0,
                                  coarse.states_evaluated + n_fine, 0, True)
            if value < best_value or (value == best_value and m < best_m):
                best_value, best_m = value, m
        m_star = best_m
    else:
        m_star = 2 * int(np.argmin(scan.value))
    chosen = trace[m_star // 2]
    log.info("minimax regret N=%d: m*=%d worst regret %.6g", N, m_star, chosen.worst_value)
    return DesignRecommendation("minimax-regret", N, m_star, True, chosen.argmax,
                                chosen.worst_value, trace)


def relative_regret_sample_size(N: int, grid: GridSpec | None = None,
                                cfg: SearchConfig = SearchConfig()) -> DesignRecommendation:
    """argmin of worst-case relative regret; always flagged degenerate."""
    _require_even_N(N)
    grid = grid or GridSpec()
    pts = grid.points()
    pts = pts.subset(np.maximum(pts.mu1, pts.mu0) > 0.0)
    scan = _parallel_scan(pts, N, N // 2, "rreg", cfg)
    trace = [TraceEntry(2 * n, float(scan.value[n]), float(pts.mu1[scan.index[n]]),
                        float(pts.mu0[scan.index[n]]), int(scan.live[n]))
             for n in range(N // 2 + 1)]
    m_star = 2 * int(np.argmin(scan.value))
    chosen = trace[m_star // 2]
    return DesignRecommendation("relative-regret", N, m_star, True, chosen.argmax,
                                chosen.worst_value, trace, degenerate=True)


def _wmb_trace(pts: GridPoints, N: int, cfg: SearchConfig) -> tuple[list[TraceEntry], _BlockTrace]:
    n_last = N // 2 - 1
    scan = _parallel_scan(pts, N, n_last, "wmb", cfg, prune=cfg.prune)
    trace = []
    for n in range(n_last + 1):
        m = 2 * n
        value, idx = float(scan.value[n]), int(scan.index[n])
        if idx < 0 or scan.retired_cap[n] > value:
            value, idx = _certify_wmb(pts, N, m, value if idx >= 0 else -math.inf, idx,
                                      float(scan.retired_cap[n]))
        trace.append(TraceEntry(m, value, float(pts.mu1[idx]), float(pts.mu0[idx]),
                                int(scan.live[n]), int(scan.pruned[n])))
    return trace, scan


def wmb_sample_size(N: int, grid: GridSpec, cfg: SearchConfig = SearchConfig()) -> DesignRecommendation:
    """Smallest even m <= N - 2 whose grid-maximal marginal ratio is at most 1."""
    _require_even_N(N)
    if N < 2:
        raise DomainError("need N >= 2")
    pts = grid.points()
    if len(pts) == 0:
        raise ConfigurationError("grid contains no states")
    if cfg.bisect:
        return _wmb_bisect(N, grid, pts, cfg)
    trace, _ = _wmb_trace(pts, N, cfg)
    m_star = next((t.m for t in trace if t.worst_value <= 1.0), None)
    extra = {"epsilon": grid.step}
    if m_star is None:
        log.info("WMB N=%d step=%g: infeasible", N, grid.step)
        return DesignRecommendation("wmb-grid", N, None, False, None, None, trace, extra=extra)
    chosen = trace[m_star // 2]
    if not cfg.full_trace:
        trace = trace[:m_star // 2 + 1]
    log.info("WMB N=%d step=%g: m*=%d (max eta %.6g)", N, grid.step, m_star, chosen.worst_value)
    return DesignRecommendation("wmb-grid", N, m_star, True, chosen.argmax,
                                chosen.worst_value, trace, extra=extra)


def _wmb_bisect(N: int, grid: GridSpec, pts: GridPoints, cfg: SearchConfig) -> DesignRecommendation:
    """Bisection on the even sizes; assumes {m : max eta <= 1} is upward closed."""
    probes: dict[int, WorstCaseResult] = {}

    def probe(n: int) -> WorstCaseResult:
        if n not in probes:
            probes[n] = worst_case_wmb(DesignContext(N, 2 * n), grid, replace(cfg, bisect=False))
        return probes[n]

    lo, hi = 0, N // 2 - 1
    extra = {"epsilon": grid.step, "search": "bisection"}
    if probe(hi).value > 1.0:
        trace = [_entry(r) for _, r in sorted(probes.items())]
        return DesignRecommendation("wmb-grid", N, None, False, None, None, trace, extra=extra)
    if probe(lo).value <= 1.0:
        hi = lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid).value <= 1.0:
            hi = mid
        else:
            lo = mid
    chosen = probe(hi)
    trace = [_entry(r) for _, r in sorted(probes.items())]
    return DesignRecommendation("wmb-grid", N, 2 * hi, True, chosen.argmax_state, chosen.value,
                                trace, extra=extra)


def _entry(r: WorstCaseResult) -> TraceEntry:
    return TraceEntry(r.m, r.value, r.argmax_state.mu1, r.argmax_state.mu0,
                      r.states_evaluated, r.states_pruned)


def wmb_sample_size_na(N: int) -> DesignRecommendation:
    """Smallest even m >= N/3 (normal-approximation rule of thirds)."""
    _require_even_N(N)
    if N < 6:
        raise DomainError(f"normal-approximation rule needs N >= 6, got {N}")
    m_star = max(2, gaussian_wmb_threshold(N).even)
    return DesignRecommendation("wmb-normal-approx", N, m_star, True, None, None, [],
                                extra={"threshold": N / 3.0})


def gaussian_wmb_sample_size(N: int) -> DesignRecommendation:
    threshold = gaussian_wmb_threshold(N)
    return DesignRecommendation("gaussian-wmb", int(N), threshold.even, True, None, None, [],
                                extra={"threshold": threshold.continuous})


# --- localization ------------------------------------------------------------------

@dataclass(frozen=True)
class LocalizationRow:
    m: int
    value: float
    mu1: float
    mu0: float
    gap: float
    bound: float
    bound_applies: bool
    holds: bool

    @property
    def ok(self) -> bool:
        return self.holds or not self.bound_applies

    def as_dict(self) -> dict:
        return asdict(self)


def localization_bound(N: int, m: int) -> float:
    """2 sqrt(log N / m): any maximiser with eta >= 1 has |mu1 - mu0| within this."""
    if m <= 0:
        return math.inf
    return 2.0 * math.sqrt(math.log(N) / m)


def _localization_row(N: int, m: int, value: float, state: BernoulliState) -> LocalizationRow:
    gap = abs(state.tau)
    bound = localization_bound(N, m)
    return LocalizationRow(m, value, state.mu1, state.mu0, gap, bound, value >= 1.0, gap <= bound)


def localization_diagnostic(N: int, m_sequence, grid: GridSpec,
                            cfg: SearchConfig = SearchConfig()) -> list[LocalizationRow]:
    rows = []
    for m in m_sequence:
        if not (0 < m <= N - 2):
            raise DomainError(f"localization needs 0 < m <= N - 2, got m={m}")
        res = worst_case_wmb(DesignContext(N, m), grid, cfg)
        rows.append(_localization_row(N, m, res.value, res.argmax_state))
    return rows


def localization_from_trace(rec: DesignRecommendation) -> list[LocalizationRow]:
    """The same check read off a WMB scan trace (m = 0 excluded)."""
    return [_localization_row(rec.N, t.m, t.worst_value, t.argmax) for t in rec.trace if t.m > 0]
