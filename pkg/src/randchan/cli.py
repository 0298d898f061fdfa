"""Command-line front end.

Each subcommand builds an :class:`ExperimentConfig`, runs it and emits a
CSV or JSON report.  The exit code is 0 only when every trial finished and
every per-sample invariant held.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from functools import partial
from typing import List, Optional, Sequence

from . import build_id
from . import experiments as ex
from .moments import MomentSpec
from .mps import BudgetExceededError, MPSEnsembleSpec, mps_trial
from .reports import RunReport, config_from_header, read_csv, render, write_atomic
from .rng import resolve_seed
from .stats import summarize

SUBCOMMANDS = ("moments", "gap", "bounds", "expander", "mps", "twirl", "gaussian")
USES_D = ("moments", "gap", "gaussian")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    subcommand: str
    n: Optional[int] = None
    d: Optional[int] = None
    lam: Optional[float] = None
    lambda_realized: Optional[float] = None
    k: Optional[int] = None
    p: Optional[int] = None
    l: Optional[int] = None
    D: Optional[int] = None
    trials: Optional[int] = None
    t: Optional[int] = None
    tol: float = 1e-8
    max_iter: int = 10_000
    seed: Optional[int] = None
    output: Optional[str] = None
    format: str = "csv"
    mode: str = "auto"
    threads: int = 1
    eigen: bool = True
    allow_order_three: bool = False
    mc_trials: int = 0
    chi_trials: int = 2000
    k_values: List[float] = field(default_factory=list)
    M: Optional[int] = None
    c: Optional[float] = None
    N: List[int] = field(default_factory=list)

    def echo(self) -> dict:
        """Config as recorded in reports (output path and pool size omitted)."""
        out = dataclasses.asdict(self)
        out.pop("output")
        out.pop("threads")
        return out

    def to_argv(self) -> List[str]:
        """Flags that reproduce this config."""
        return config_argv(self.echo())


_FLAG_NAMES = {
    "n": "--n", "d": "--d", "k": "--k", "p": "--p", "l": "--l", "D": "--D",
    "trials": "--trials", "t": "--t", "tol": "--tol", "max_iter": "--max-iter",
    "seed": "--seed", "format": "--format", "mode": "--mode", "mc_trials": "--mc-trials",
    "chi_trials": "--chi-trials", "M": "--M", "c": "--c",
}


_COMMON_KEYS = {"seed", "format", "tol", "max_iter", "mode"}
_SUBCOMMAND_KEYS = {
    "moments": {"n", "d", "k", "p", "allow_order_three", "mc_trials"},
    "gap": {"n", "d", "k", "trials", "eigen"},
    "expander": {"n", "k", "trials"},
    "bounds": set(),
    "mps": {"D", "k", "l", "t", "trials"},
    "twirl": {"M", "c", "trials"},
    "gaussian": {"n", "d", "k", "trials", "chi_trials"},
}


def config_argv(echo: dict) -> List[str]:
    sub = echo["subcommand"]
    accepted = _COMMON_KEYS | _SUBCOMMAND_KEYS[sub]
    argv = [sub]
    for key, flag in _FLAG_NAMES.items():
        if key in accepted and echo.get(key) is not None:
            argv += [flag, repr(echo[key]) if isinstance(echo[key], float) else str(echo[key])]
    if sub == "bounds":
        argv += ["--lambda", repr(echo["lam"]), "--k", ",".join(repr(k) for k in echo["k_values"])]
    if sub == "twirl":
        argv += ["--N", ",".join(str(v) for v in echo["N"])]
    if "eigen" in accepted and not echo.get("eigen", True):
        argv.append("--no-eigen")
    if "allow_order_three" in accepted and echo.get("allow_order_three"):
        argv.append("--allow-order-three")
    return argv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message} (see --help)\n")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _seed(text):
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None


def parse_grid(text: str) -> List[float]:
    """``a:b:s`` inclusive of both ends, or a comma list."""
    try:
        if ":" in text:
            a, b, s = (float(x) for x in text.split(":"))
            if s <= 0 or b < a:
                raise ValueError
            count = int(math.floor((b - a) / s + 1e-9)) + 1
            vals = [a + i * s for i in range(count)]
        else:
            vals = [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"grid must be 'start:stop:step' with step > 0 or a comma list, got {text!r}"
        ) from None
    if not vals:
        raise argparse.ArgumentTypeError("empty grid")
    return [int(v) if float(v).is_integer() else v for v in vals]


def _int_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="randchan",
        description="Monte Carlo experiments on random quantum channels.",
        epilog="randchan replay REPORT [FLAGS] re-runs the configuration echoed in a report.",
    )
    parser.add_argument("--version", action="version", version=build_id())

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None,
                        help="master seed (default: $RANDCHAN_SEED or a fresh random seed)")
    common.add_argument("--output", "-o", default=None, help="report path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    common.add_argument("--tol", type=_positive_float, default=1e-8)
    common.add_argument("--max-iter", type=_positive_int, default=10_000)
    common.add_argument("--mode", choices=("auto", "dense", "matrix-free"), default="auto")

    def dims(sp, with_d=True):
        sp.add_argument("--n", type=_positive_int, required=True)
        sp.add_argument("--k", type=_positive_int, required=True)
        if with_d:
            g = sp.add_mutually_exclusive_group(required=True)
            g.add_argument("--d", type=_positive_int)
            g.add_argument("--lambda", dest="lam", type=_positive_float)

    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    sp = sub.add_parser("moments", parents=[common], help="exact and limiting moments of f")
    dims(sp)
    sp.add_argument("--p", type=_positive_int, default=1)
    sp.add_argument("--allow-order-three", action="store_true",
                    help="permit p=3 (Weingarten tables up to order 6)")
    sp.add_argument("--mc-trials", type=int, default=0,
                    help="also estimate the moment from this many Haar draws")

    sp = sub.add_parser("gap", parents=[common], help="singular values and eigenvalue gap")
    dims(sp)
    sp.add_argument("--trials", type=_positive_int, default=10)
    sp.add_argument("--no-eigen", dest="eigen", action="store_false",
                    help="skip |lambda_2| and the fixed point (faster)")

    sp = sub.add_parser("expander", parents=[common], help="square channels (d = n)")
    dims(sp, with_d=False)
    sp.add_argument("--trials", type=_positive_int, default=20)

    sp = sub.add_parser("bounds", parents=[common], help="analytic bound curves")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--k-grid", dest="k_values", type=parse_grid, help="start:stop:step, inclusive")
    g.add_argument("--k", dest="k_values", type=parse_grid, help="comma list of k values")
    sp.add_argument("--lambda", dest="lam", type=_positive_float, default=1.0)

    sp = sub.add_parser("mps", parents=[common], help="reduced states of random MPS")
    sp.add_argument("--D", type=_positive_int, required=True)
    sp.add_argument("--k", type=_positive_int, required=True)
    sp.add_argument("--l", type=_positive_int, default=2)
    sp.add_argument("--t", type=_positive_int, default=None, help="approximation depth")
    sp.add_argument("--trials", type=_positive_int, default=100)

    sp = sub.add_parser("twirl", parents=[common], help="twirled Ginibre structure")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--M", type=_positive_int)
    g.add_argument("--c", type=_positive_float, help="aspect ratio, M = round(c N)")
    sp.add_argument("--N", type=_int_list, required=True, help="comma list of N values")
    sp.add_argument("--trials", type=_positive_int, default=20_000)

    sp = sub.add_parser("gaussian", parents=[common], help="Gaussian model comparison")
    dims(sp)
    sp.add_argument("--trials", type=_positive_int, default=10)
    sp.add_argument("--chi-trials", type=_positive_int, default=2000)
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> ExperimentConfig:
    """Parse and validate ``argv``; invalid input exits with status 2."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _config_from_args(args)
    except ConfigError as exc:
        parser.error(str(exc))


def _config_from_args(args) -> ExperimentConfig:
    values = {f.name: getattr(args, f.name) for f in dataclasses.fields(ExperimentConfig)
              if hasattr(args, f.name)}
    cfg = ExperimentConfig(**values)
    cfg.seed = resolve_seed(args.seed)
    sub = cfg.subcommand
    if sub in USES_D:
        n, k = cfg.n, cfg.k
        if cfg.d is None:
            if not cfg.lam < k:
                raise ConfigError(f"--lambda must lie in (0, k) = (0, {k}), got {cfg.lam}")
            cfg.d = max(1, round(cfg.lam * n))
        if cfg.d > n * k:
            raise ConfigError(f"d={cfg.d} > n*k={n * k}: no isometry exists; lower --d or raise --k")
        cfg.lambda_realized = cfg.d / n
    elif sub == "expander":
        cfg.d = cfg.n
        cfg.lambda_realized = 1.0
    elif sub == "bounds":
        bad = [k for k in cfg.k_values if not k > cfg.lam]
        if bad:
            raise ConfigError(f"every k must exceed --lambda={cfg.lam}; offending values {bad[:3]}")
        cfg.lambda_realized = cfg.lam
    elif sub == "mps":
        if cfg.D * cfg.k**cfg.l > 4096:
            raise ConfigError(f"D*k^l={cfg.D * cfg.k**cfg.l} exceeds the dense budget 4096; "
                              "lower --l or --D")
    if sub == "moments":
        if cfg.p > 3 or (cfg.p == 3 and not cfg.allow_order_three):
            raise ConfigError("exact moments support p <= 2 (p = 3 with --allow-order-three)")
        if cfg.n * cfg.k < 2 * cfg.p or cfg.d < cfg.p:
            raise ConfigError(f"exact moments of order {cfg.p} need n*k >= {2 * cfg.p} "
                              f"and d >= {cfg.p}")
    return cfg


# ---------------------------------------------------------------------------


def _report(cfg, columns, batch, summary=None, extra_ok=True) -> RunReport:
    ok = extra_ok and all(r.get("invariants_ok", True) for r in batch.rows)
    return RunReport(config=cfg.echo(), columns=columns, rows=batch.rows,
                     summary=summary or {}, version=build_id(), truncated=batch.truncated,
                     error=batch.error, invariants_ok=ok)


def _run_gap(cfg, d):
    fn = partial(_gap_row, cfg, d)
    batch = ex.run_trials(fn, cfg.trials, cfg.threads)
    cols = ["f", "s1", "s2", "restricted_norm", "lambda2_abs", "entropy"]
    return _report(cfg, ex.GAP_COLUMNS, batch, summarize(batch.rows, cols))


def _gap_row(cfg, d, trial):
    return ex.gap_trial(cfg.n, d, cfg.k, cfg.seed, trial, mode=cfg.mode, tol=cfg.tol,
                        max_iter=cfg.max_iter, eigen=cfg.eigen)


MPS_COLUMNS = ["trial", "D", "k", "l", "t", "purity", "entropy", "purity_approx", "tv_gap",
               "purity_full", "entropy_full", "max_dev", "max_dev_full", "isometry_residual",
               "invariants_ok"]


def _mps_row(spec, trial):
    row = mps_trial(spec, trial)
    row["invariants_ok"] = bool(row["isometry_residual"] < ex.INVARIANT_TOL
                                and 0 < row["purity"] <= 1 + 1e-12
                                and row["entropy"] >= -1e-12)
    return row


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Run ``cfg`` and return its report (nothing is written here)."""
    start = time.perf_counter()
    sub = cfg.subcommand
    if sub == "moments":
        spec = MomentSpec(cfg.p, cfg.n, cfg.d, cfg.k)
        row = ex.moment_row(spec, cfg.allow_order_three, cfg.mc_trials, cfg.seed)
        summary = {key: row[key] for key in ("p", "n", "d", "k", "lambda_realized")}
        summary["exact_value"] = {"num": row["exact_num"], "den": row["exact_den"]}
        summary["limit_value"] = row["limit_value"]
        report = _report(cfg, list(row), ex.TrialBatch([row]), {"moment": summary})
    elif sub in ("gap", "expander"):
        report = _run_gap(cfg, cfg.d)
    elif sub == "bounds":
        rows = ex.bounds_rows(cfg.k_values, cfg.lam)
        report = _report(cfg, ex.BOUND_COLUMNS, ex.TrialBatch(rows),
                         {"thresholds": ex.bounds_thresholds(cfg.lam)})
    elif sub == "mps":
        spec = MPSEnsembleSpec(cfg.D, cfg.k, cfg.l, cfg.trials, cfg.t, seed=cfg.seed)
        batch = ex.run_trials(partial(_mps_row, spec), cfg.trials, cfg.threads)
        summary = summarize(batch.rows, ["purity", "entropy", "purity_approx", "tv_gap",
                                         "purity_full", "entropy_full", "max_dev"])
        report = _report(cfg, MPS_COLUMNS, batch, summary)
    elif sub == "twirl":
        def row(i):
            N = cfg.N[i]
            M = cfg.M if cfg.M is not None else max(1, round(cfg.c * N))
            return ex.twirl_row(M, N, cfg.trials, cfg.seed, i)

        batch = ex.run_trials(row, len(cfg.N), cfg.threads)
        report = _report(cfg, ex.TWIRL_COLUMNS, batch)
    elif sub == "gaussian":
        def row(i):
            return ex.gaussian_trial(cfg.n, cfg.d, cfg.k, cfg.seed, i, tol=cfg.tol, mode=cfg.mode)

        batch = ex.run_trials(row, cfg.trials, cfg.threads)
        summary = summarize(batch.rows, ["gaussian_norm", "restricted_norm"])
        if batch.rows:
            summary["comparison"] = ex.gaussian_summary(batch.rows, cfg.n, cfg.d, cfg.k,
                                                        cfg.chi_trials, cfg.seed)
        report = _report(cfg, ex.GAUSSIAN_COLUMNS, batch, summary)
    else:  # pragma: no cover - argparse restricts the choices
        raise ConfigError(f"unknown subcommand {sub!r}")
    report.wall_clock = time.perf_counter() - start
    return report


def replay_argv(path) -> List[str]:
    """Flags reproducing the run recorded in a CSV or JSON report."""
    with open(path, newline="") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        echo = json.loads(text)["config"]
    else:
        echo = config_from_header(read_csv(text)[0])
    return config_argv(echo)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["replay"]:
        if len(argv) < 2:
            print("randchan: error: replay needs a report path (see --help)", file=sys.stderr)
            return 2
        argv = replay_argv(argv[1]) + argv[2:]
    cfg = parse_config(argv)
    try:
        report = run_experiment(cfg)
    except (BudgetExceededError, ValueError) as exc:
        print(f"randchan: error: {exc}", file=sys.stderr)
        return 2
    text = render(report, cfg.format)
    if cfg.output:
        write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)
    if report.error:
        print(f"randchan: {report.error}", file=sys.stderr)
    return 0 if report.ok else 1
