"""Command-line front end: ``testroll {recommend,table,figure,validate,simulate}``.

Exit status: 0 on success, 1 on a usage or configuration error, 2 when the
requested design is infeasible (or a validation suite fails).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bernoulli_model import BernoulliState, DesignContext, error_prob
from .criteria import evaluate, relative_regret_batch
from .errors import ConfigurationError, TestRollError
from .gaussian_model import GaussianState, gaussian_error_prob
from .montecarlo import SimConfig, simulate_error_prob, simulate_regret
from .search import (DesignRecommendation, GridSpec, SearchConfig, gaussian_wmb_sample_size,
                     minimax_sample_size, relative_regret_sample_size, wmb_sample_size,
                     wmb_sample_size_na)
from .validation import SUITES, run_suites

log = logging.getLogger("testroll")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2

CRITERIA = ("minimax-regret", "wmb-grid", "wmb-normal-approx", "gaussian-wmb", "relative-regret")
TABLE1_N = (200, 500, 1000, 5000, 10000)
TABLE2_N = (200, 500, 1000, 5000, 10000)
TABLE2_EPS = (0.01, 0.005)
FIGA_EPS = (1e-2, 1e-3, 1e-4)


@dataclass
class RunConfig:
    """Every option of every verb; JSON config files mirror these field names."""

    command: str = "recommend"
    N: int | None = None
    model: str = "bernoulli"
    sigma: float = 1.0
    criterion: str = "minimax-regret"
    epsilon: float | None = None
    grid_step: float = 0.01
    refine: bool = True
    prune: bool = True
    bisect: bool = False
    workers: int = 1
    seed: int = 0
    output: str | None = None
    format: str | None = None
    N_list: list[int] | None = None
    epsilon_list: list[float] | None = None
    target: str | None = None
    suites: list[str] | None = None
    m: int | None = None
    mu1: float | None = None
    mu0: float | None = None
    tau: float | None = None
    replications: int = 100_000
    quantity: str = "error"
    checkpoint: str | None = None
    full_trace: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def search_config(self) -> SearchConfig:
        return SearchConfig(refine=self.refine, prune=self.prune, bisect=self.bisect,
                            workers=self.workers, full_trace=self.full_trace)


# --- formatting --------------------------------------------------------------------

def _g(x) -> str:
    """Six significant digits for probabilities, ratios and fractions."""
    return "" if x is None else f"{x:.6g}"


def _f3(x) -> str:
    return f"{x:.3f}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# --- recommend ---------------------------------------------------------------------

def _require_N(cfg: RunConfig) -> int:
    if cfg.N is None:
        raise ConfigurationError("--N is required")
    if int(cfg.N) != cfg.N or cfg.N <= 0 or cfg.N % 2:
        raise ConfigurationError(f"--N must be a positive even integer, got {cfg.N!r}")
    return int(cfg.N)


def _epsilon(cfg: RunConfig) -> float:
    if cfg.epsilon is None:
        raise ConfigurationError("--epsilon is required for the wmb-grid criterion")
    if not (0.0 < cfg.epsilon <= 0.5):
        raise ConfigurationError(f"--epsilon must lie in (0, 0.5], got {cfg.epsilon!r}")
    return float(cfg.epsilon)


def recommend(cfg: RunConfig) -> DesignRecommendation:
    N = _require_N(cfg)
    crit = cfg.criterion
    if crit not in CRITERIA:
        raise ConfigurationError(f"unknown criterion {crit!r}; choose from {', '.join(CRITERIA)}")
    if cfg.model == "gaussian" and crit != "gaussian-wmb":
        raise ConfigurationError("the gaussian model supports only the gaussian-wmb criterion "
                                 "(absolute minimax regret has no finite recommendation there)")
    scfg = cfg.search_config()
    if crit == "minimax-regret":
        return minimax_sample_size(N, GridSpec(step=cfg.grid_step), scfg)
    if crit == "wmb-grid":
        return wmb_sample_size(N, GridSpec.wmb(_epsilon(cfg)), scfg)
    if crit == "wmb-normal-approx":
        return wmb_sample_size_na(N)
    if crit == "gaussian-wmb":
        return gaussian_wmb_sample_size(N)
    return relative_regret_sample_size(N, GridSpec(step=cfg.grid_step), scfg)


def recommendation_report(rec: DesignRecommendation) -> dict:
    out = rec.to_dict()
    if rec.criterion == "relative-regret":
        out["degeneracyWarning"] = True
    return out


def cmd_recommend(cfg: RunConfig) -> int:
    rec = recommend(cfg)
    if (cfg.format or "json") == "json":
        _emit(_json(recommendation_report(rec)), cfg)
    else:
        lf = rec.least_favorable
        row = [rec.criterion, rec.N, "" if rec.m_star is None else rec.m_star, _g(rec.fraction),
               "" if lf is None else _g(lf.mu1), "" if lf is None else _g(lf.mu0),
               int(rec.feasible)]
        _emit(_csv(["criterion", "N", "mStar", "fraction", "mu1", "mu0", "feasible"], [row]), cfg)
    if rec.degenerate:
        log.warning("relative regret is degenerate: it has no meaningful interior optimum")
    return EXIT_OK if rec.feasible else EXIT_INFEASIBLE


# --- table -------------------------------------------------------------------------

class _Checkpoint:
    """Completed table rows as JSON lines, keyed by their full configuration."""

    def __init__(self, path: str | None):
        self.path = Path(path) if path else None
        self.rows: dict[str, dict] = {}
        if self.path and self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self.rows[rec["key"]] = rec["row"]

    def get(self, key: str):
        return self.rows.get(key)

    def put(self, key: str, row: dict) -> None:
        self.rows[key] = row
        if self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps({"key": key, "row": row}) + "\n")


def _table1_rows(cfg: RunConfig, ckpt: _Checkpoint) -> list[dict]:
    rows = []
    for N in cfg.N_list or TABLE1_N:
        key = json.dumps(["table1", N, cfg.grid_step, cfg.refine])
        row = ckpt.get(key)
        if row is None:
            log.info("table1: N=%d", N)
            rec = minimax_sample_size(int(N), GridSpec(step=cfg.grid_step), cfg.search_config())
            row = {"N": rec.N, "m": rec.m_star, "fraction": rec.fraction,
                   "mu1": rec.least_favorable.mu1, "mu0": rec.least_favorable.mu0, "feasible": True}
            ckpt.put(key, row)
        rows.append(row)
    return rows


def _table2_rows(cfg: RunConfig, ckpt: _Checkpoint) -> list[dict]:
    eps_list = cfg.epsilon_list or ([cfg.epsilon] if cfg.epsilon else TABLE2_EPS)
    rows = []
    for eps in eps_list:
        for N in cfg.N_list or TABLE2_N:
            key = json.dumps(["table2", eps, N])
            row = ckpt.get(key)
            if row is None:
                log.info("table2: epsilon=%g N=%d", eps, N)
                rec = wmb_sample_size(int(N), GridSpec.wmb(eps), cfg.search_config())
                lf = rec.least_favorable
                row = {"epsilon": eps, "N": rec.N, "m": rec.m_star, "fraction": rec.fraction,
                       "mu0": None if lf is None else lf.mu0, "mu1": None if lf is None else lf.mu1,
                       "feasible": rec.feasible}
                ckpt.put(key, row)
            rows.append(row)
    return rows


def cmd_table(cfg: RunConfig) -> int:
    target = cfg.target
    ckpt = _Checkpoint(cfg.checkpoint)
    if target == "table1":
        rows = _table1_rows(cfg, ckpt)
        body = [[r["N"], r["m"], _f3(r["fraction"])] for r in rows]
        header = ["N", "m", "fraction"]
    elif target == "table2":
        rows = _table2_rows(cfg, ckpt)
        body = []
        for r in rows:
            if r["feasible"]:
                body.append([f"{r['epsilon']:g}", r["N"], r["m"], _f3(r["fraction"]),
                             _f3(r["mu0"]), _f3(r["mu1"])])
            else:
                body.append([f"{r['epsilon']:g}", r["N"], "", "", "", ""])
        header = ["epsilon", "N", "m", "fraction", "mu0", "mu1"]
    else:
        raise ConfigurationError(f"unknown table {target!r}; choose table1 or table2")
    if (cfg.format or "csv") == "json":
        _emit(_json({"table": target, "rows": rows}), cfg)
    else:
        _emit(_csv(header, body), cfg)
    return EXIT_OK if all(r.get("feasible", True) for r in rows) else EXIT_INFEASIBLE


# --- figure ------------------------------------------------------------------------

def figure_series(cfg: RunConfig) -> tuple[list[str], list[list]]:
    target = cfg.target
    N = int(cfg.N or 500)
    if N % 2 or N <= 0:
        raise ConfigurationError(f"--N must be a positive even integer, got {N!r}")
    scfg = dataclasses.replace(cfg.search_config(), full_trace=True)
    if target in ("fig1a", "fig1b"):
        rec = minimax_sample_size(N, GridSpec(step=cfg.grid_step), scfg)
        if target == "fig1a":
            return ["m", "mu1", "mu0"], [[t.m, _g(t.mu1), _g(t.mu0)] for t in rec.trace]
        return ["m", "worstRegret"], [[t.m, _g(t.worst_value)] for t in rec.trace]
    if target == "fig2":
        eps = cfg.epsilon if cfg.epsilon is not None else 0.01
        rec = wmb_sample_size(N, GridSpec.wmb(eps), dataclasses.replace(scfg, bisect=False))
        return (["m", "maxEta", "crossing"],
                [[t.m, _g(t.worst_value), int(t.m == rec.m_star)] for t in rec.trace])
    if target == "figA":
        rows = []
        for eps in cfg.epsilon_list or FIGA_EPS:
            ms = list(range(0, N + 1, 2))
            for m in ms:
                e = error_prob(DesignContext(N, m), BernoulliState(eps, 0.0))
                rows.append([m, f"{eps:g}", _g(float(relative_regret_batch(N, m, eps, e, eps)))])
        return ["m", "epsilon", "relativeRegret"], rows
    raise ConfigurationError(f"unknown figure {target!r}; choose fig1a, fig1b, fig2 or figA")


def cmd_figure(cfg: RunConfig) -> int:
    header, rows = figure_series(cfg)
    if (cfg.format or "csv") == "json":
        _emit(_json({"figure": cfg.target, "columns": header, "rows": rows}), cfg)
    else:
        _emit(_csv(header, rows), cfg)
    return EXIT_OK


# --- validate / simulate -----------------------------------------------------------

def cmd_validate(cfg: RunConfig) -> int:
    names = cfg.suites or list(SUITES)
    for n in names:
        if n not in SUITES:
            raise ConfigurationError(f"unknown suite {n!r}; choose from {', '.join(SUITES)}")
    report = run_suites(names, seed=cfg.seed if cfg.seed else None, workers=cfg.workers)
    _emit(_json(report), cfg)
    for s in report["suites"]:
        log.info("%s: %s", s["suite"], "pass" if s["passed"] else "FAIL")
    return EXIT_OK if report["passed"] else EXIT_INFEASIBLE


def simulation_report(cfg: RunConfig) -> dict:
    N = _require_N(cfg)
    if cfg.m is None:
        raise ConfigurationError("--m is required for simulate")
    ctx = DesignContext(N, int(cfg.m))
    if cfg.model == "gaussian":
        if cfg.tau is None:
            raise ConfigurationError("--tau is required for the gaussian model")
        state = GaussianState(cfg.tau, cfg.sigma)
    else:
        if cfg.mu1 is None or cfg.mu0 is None:
            raise ConfigurationError("--mu1 and --mu0 are required for the bernoulli model")
        state = BernoulliState(cfg.mu1, cfg.mu0)
    sim = SimConfig(int(cfg.replications), int(cfg.seed), state, ctx, workers=cfg.workers)
    if cfg.quantity == "error":
        est = simulate_error_prob(sim)
        if isinstance(state, GaussianState):
            exact = gaussian_error_prob(ctx.m, state)
        else:
            exact = error_prob(ctx, state)
    elif cfg.quantity == "regret":
        est = simulate_regret(sim)
        exact = evaluate(ctx, state).regret if isinstance(state, BernoulliState) else None
    else:
        raise ConfigurationError(f"unknown quantity {cfg.quantity!r}; choose error or regret")
    return {"quantity": cfg.quantity, "model": cfg.model, "mean": est.mean,
            "stdError": est.std_error, "replications": est.replications, "seed": int(cfg.seed),
            "exact": exact}


def cmd_simulate(cfg: RunConfig) -> int:
    report = simulation_report(cfg)
    if (cfg.format or "json") == "json":
        _emit(_json(report), cfg)
    else:
        keys = ["quantity", "model", "mean", "stdError", "replications", "seed", "exact"]
        vals = [report[k] if not isinstance(report[k], float) else _g(report[k]) for k in keys]
        _emit(_csv(keys, [vals]), cfg)
    return EXIT_OK


COMMANDS = {
    "recommend": cmd_recommend,
    "table": cmd_table,
    "figure": cmd_figure,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
}


# --- argument parsing --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    # defaults are None so a --config file is only overridden by flags actually given
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file with RunConfig fields", default=S)
    p.add_argument("--N", type=int, default=S, help="population size (even)")
    p.add_argument("--epsilon", type=float, default=S, help="WMB grid spacing")
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--model", choices=("bernoulli", "gaussian"), default=S)
    p.add_argument("--criterion", choices=CRITERIA, default=S)
    p.add_argument("--grid-step", dest="grid_step", type=float, default=S)
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--prune", action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--bisect", action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--full-trace", dest="full_trace", action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--output", default=S, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=S)
    p.add_argument("--N-list", dest="N_list", type=int, nargs="+", default=S)
    p.add_argument("--epsilon-list", dest="epsilon_list", type=float, nargs="+", default=S)
    p.add_argument("--checkpoint", default=S, help="JSON-lines file of finished table rows")
    p.add_argument("-q", "--quiet", action="store_true", default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="testroll", description="Sample sizes for test-and-roll experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("recommend", help="recommend an experimental size m for one criterion")
    _common(p)
    p = sub.add_parser("table", help="reproduce the sample-size tables as CSV")
    p.add_argument("target", choices=("table1", "table2"))
    _common(p)
    p = sub.add_parser("figure", help="emit figure data series")
    p.add_argument("target", choices=("fig1a", "fig1b", "fig2", "figA"))
    _common(p)
    p = sub.add_parser("validate", help="run property suites")
    p.add_argument("--suite", dest="suites", action="append", choices=sorted(SUITES),
                   default=argparse.SUPPRESS)
    _common(p)
    p = sub.add_parser("simulate", help="Monte Carlo estimate of error probability or regret")
    p.add_argument("--m", type=int, default=argparse.SUPPRESS)
    p.add_argument("--mu1", type=float, default=argparse.SUPPRESS)
    p.add_argument("--mu0", type=float, default=argparse.SUPPRESS)
    p.add_argument("--tau", type=float, default=argparse.SUPPRESS)
    p.add_argument("--replications", type=int, default=argparse.SUPPRESS)
    p.add_argument("--quantity", choices=("error", "regret"), default=argparse.SUPPRESS)
    _common(p)
    return parser


def parse_config(argv=None) -> tuple[RunConfig, bool]:
    ns = vars(build_parser().parse_args(argv))
    quiet = bool(ns.pop("quiet", False))
    data: dict = {}
    path = ns.pop("config", None)
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
    data.update(ns)
    return RunConfig.from_dict(data), quiet


def main(argv=None) -> int:
    try:
        cfg, quiet = parse_config(argv)
    except SystemExit as exc:
        # argparse exits on usage errors and --help; report the status instead
        return int(exc.code or 0)
    except TestRollError as exc:
        print(f"testroll: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(name)s: %(message)s")
    try:
        if cfg.workers < 1:
            raise ConfigurationError("--workers must be >= 1")
        return COMMANDS[cfg.command](cfg)
    except TestRollError as exc:
        print(f"testroll: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
