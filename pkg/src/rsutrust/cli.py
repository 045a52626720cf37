"""Command line: run one scenario, sweep a grid, validate a config, or run the formula oracles."""
from __future__ import annotations

import argparse
import os
import sys
import time
from typing import List, Optional, Sequence

from .config import PROTOCOLS, ConfigError, ScenarioConfig, coerce_key, load_config, preset
from .metrics import run_metrics
from .oracle import run_oracles
from .simulation import run
from .sweep import FORMATS, SweepError, SweepGrid, aggregate, emit_results, emit_run, run_sweep

OUT_ENV = "RSUTRUST_OUT"


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _overrides(items: Sequence[str]) -> dict:
    out = {}
    problems = []
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep:
            problems.append(f"override {item!r} is not key=value")
            continue
        try:
            k, v = coerce_key(key.strip(), raw.strip())
        except ConfigError as exc:
            problems.extend(exc.problems)
            continue
        out[k] = v
    if problems:
        raise ConfigError(problems)
    return out


def _load(args: argparse.Namespace) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else preset(args.preset)
    changes = _overrides(args.set or [])
    return cfg.replace(**changes) if changes else cfg


def _out_dir(args: argparse.Namespace) -> str:
    return args.out or os.environ.get(OUT_ENV) or "results"


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="scenario file (key = value with [section] headers)")
    p.add_argument("--preset", default="desk", help="built-in scenario when --config is absent (full, desk)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key; repeatable")
    p.add_argument("--out", help=f"output location (default: ${OUT_ENV} or ./results)")
    p.add_argument("--format", choices=FORMATS, default="csv")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args)
    seed = args.seed if args.seed is not None else cfg.scenario.seed
    t0 = time.perf_counter()
    result = run(cfg, seed)
    paths = emit_run(result, _out_dir(args), args.format)
    m = run_metrics(result)
    shown = ", ".join(f"{k}={'undefined' if m[k] is None else f'{m[k]:.4f}'}"
                      for k in ("fpr", "fnr", "precision", "recall", "accuracy", "pdr"))
    print(f"seed {seed}: {shown} ({time.perf_counter() - t0:.1f} s)")
    for p in paths:
        print(p)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.seed_list:
        seeds = [int(s) for s in args.seed_list.split(",") if s.strip()]
    else:
        start = args.seed if args.seed is not None else 1
        seeds = list(range(start, start + (args.seeds or cfg.scenario.iterations)))
    filters = {"off": (False,), "on": (True,), "both": (False, True)}[args.filter]
    grid = SweepGrid(tuple(_floats(args.mr)), tuple(_floats(args.mv)),
                     tuple(args.protocol.split(",")), filters)
    t0 = time.perf_counter()
    cells = run_sweep(cfg, grid, seeds, args.workers)
    rows = aggregate(cells)
    out = _out_dir(args)
    path = out if out.endswith((".csv", ".jsonl")) else os.path.join(out, f"sweep.{args.format}")
    emit_results(rows, path, args.format)
    print(f"{len(cells)} cells x {len(seeds)} seeds in {time.perf_counter() - t0:.1f} s -> {path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    _load(args)
    print("ok")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    reports = run_oracles(args.cases, args.seed or 0)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name:<22} cases={r.cases} max_abs_error={r.max_error:.3e} failures={r.failures}")
    return 0 if all(r.passed for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsutrust", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write its result files")
    _add_scenario_args(p)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a grid of adversary mixes over several seeds")
    _add_scenario_args(p)
    p.add_argument("--seed", type=int, help="first seed (default 1)")
    p.add_argument("--seeds", type=int, help="number of seeds (default: the config's iterations)")
    p.add_argument("--seed-list", help="explicit comma-separated seeds")
    p.add_argument("--mr", default="0.2,0.4,0.6", help="malicious RSU fractions")
    p.add_argument("--mv", default="0.05,0.1,0.15,0.2", help="malicious vehicle fractions")
    p.add_argument("--protocol", default="reactive", help=f"comma-separated, from {', '.join(PROTOCOLS)}")
    p.add_argument("--filter", choices=("off", "on", "both"), default="off", help="trust-filtered routing")
    p.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a config and report every problem")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="compare each trust formula with a direct evaluation")
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return 2
    except (SweepError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
