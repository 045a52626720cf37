"""Experiment sweeps over adversary mixes and routing variants, seed aggregation and result files."""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from scipy import stats

from .config import ScenarioConfig, emit_config
from .metrics import DETECTION_METRICS, NETWORK_METRICS, run_metrics, window_metrics
from .simulation import RunResult, run

SWEEP_COLUMNS = ("mr", "mv", "protocol", "filter", "metric", "mean", "stderr", "ci95_lo", "ci95_hi",
                 "n_seeds", "seed_hash", "note")
RUN_METRICS = ("tp", "fp", "tn", "fn") + DETECTION_METRICS + NETWORK_METRICS
FORMATS = ("csv", "jsonl")


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepGrid:
    mr: Tuple[float, ...] = (0.2, 0.4, 0.6)
    mv: Tuple[float, ...] = (0.05, 0.1, 0.15, 0.2)
    protocol: Tuple[str, ...] = ("reactive",)
    trust_filter: Tuple[bool, ...] = (False,)

    def cells(self) -> List[Tuple[float, float, str, bool]]:
        cells = list(itertools.product(self.mr, self.mv, self.protocol, self.trust_filter))
        if not cells:
            raise SweepError("sweep grid is empty")
        return cells


@dataclass
class CellResult:
    mr: float
    mv: float
    protocol: str
    trust_filter: bool
    seeds: List[int]
    runs: List[Dict[str, Optional[float]]] = field(default_factory=list)


def seed_hash(seeds: Sequence[int]) -> str:
    return hashlib.sha256(",".join(str(s) for s in seeds).encode()).hexdigest()[:16]


def cell_config(base: ScenarioConfig, cell: Tuple[float, float, str, bool]) -> ScenarioConfig:
    mr, mv, protocol, flt = cell
    return base.replace(mr=mr, mv=mv, protocol=protocol, trust_filter=flt)


def _run_one(job: Tuple[ScenarioConfig, int]) -> Dict[str, Optional[float]]:
    cfg, seed = job
    try:
        return run_metrics(run(cfg, seed))
    except Exception as exc:  # echo the failing scenario so it can be replayed
        raise SweepError(f"run failed for seed {seed}: {exc!r}\n{emit_config(cfg)}") from exc


def run_sweep(base: ScenarioConfig, grid: SweepGrid, seeds: Sequence[int],
              workers: Optional[int] = None) -> List[CellResult]:
    """Run every cell for every seed. Runs are independent, so they may go to a process pool."""
    if not seeds:
        raise SweepError("at least one seed is required")
    cells = grid.cells()
    jobs = [(cell_config(base, c), s) for c in cells for s in seeds]
    workers = workers if workers is not None else (os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs))
    else:
        rows = [_run_one(j) for j in jobs]
    out = []
    for k, (mr, mv, protocol, flt) in enumerate(cells):
        out.append(CellResult(mr, mv, protocol, flt, list(seeds), rows[k * len(seeds):(k + 1) * len(seeds)]))
    return out


def summarize(values: Sequence[Optional[float]]) -> Dict[str, Any]:
    """Mean, standard error and a t-based 95% interval over the defined values."""
    defined = [float(v) for v in values if v is not None and not math.isnan(v)]
    notes = []
    if len(defined) < len(values):
        notes.append(f"undefined_in_{len(values) - len(defined)}_seeds")
    n = len(defined)
    row: Dict[str, Any] = {"mean": None, "stderr": None, "ci95_lo": None, "ci95_hi": None, "n_seeds": n}
    if n == 0:
        return {**row, "note": ";".join(notes + ["undefined"])}
    mean = sum(defined) / n
    row["mean"] = mean
    if n < 2:
        notes.append("ci_omitted_single_seed")
        return {**row, "note": ";".join(notes)}
    sd = math.sqrt(sum((v - mean) ** 2 for v in defined) / (n - 1))
    se = sd / math.sqrt(n)
    half = float(stats.t.ppf(0.975, n - 1)) * se
    row.update(stderr=se, ci95_lo=mean - half, ci95_hi=mean + half)
    return {**row, "note": ";".join(notes)}


def aggregate(cells: Iterable[CellResult], metrics: Sequence[str] = RUN_METRICS) -> List[Dict[str, Any]]:
    rows = []
    for c in cells:
        h = seed_hash(c.seeds)
        for m in metrics:
            s = summarize([r.get(m) for r in c.runs])
            rows.append({"mr": c.mr, "mv": c.mv, "protocol": c.protocol, "filter": c.trust_filter,
                         "metric": m, **s, "seed_hash": h})
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_rows(rows: Sequence[Dict[str, Any]], columns: Sequence[str], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
        return buf.getvalue()
    if fmt == "jsonl":
        return "".join(json.dumps({c: r.get(c) for c in columns}) + "\n" for r in rows)
    raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def write_text(path: str, text: str) -> str:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def emit_results(rows: Sequence[Dict[str, Any]], path: str, fmt: str = "csv") -> str:
    return write_text(path, format_rows(rows, SWEEP_COLUMNS, fmt))


def emit_run(result: RunResult, out_dir: str, fmt: str = "csv") -> List[str]:
    """Metrics, per-window trust series and per-window detection rates of one run, plus its config."""
    ext = "csv" if fmt == "csv" else "jsonl"
    metrics = run_metrics(result)
    h = seed_hash([result.seed])
    metric_rows = [{"seed": result.seed, "metric": k, "value": metrics[k], "seed_hash": h} for k in RUN_METRICS]
    series_rows = [dict(zip(result.SERIES_COLUMNS, row)) for row in result.series]
    windows = window_metrics(result)
    counter_rows = [{"counter": k, "value": v} for k, v in sorted(result.counters.items())]
    n = result.network
    for k in ("injected", "delivered", "delivered_modified", "dropped_malice", "dropped_no_route",
              "dropped_hop_budget", "dropped_unreachable", "retransmissions"):
        counter_rows.append({"counter": f"network.{k}", "value": getattr(n, k)})
    counter_rows.append({"counter": "network.in_flight", "value": result.in_flight})
    return [
        write_text(os.path.join(out_dir, "config.ini"), emit_config(result.config.replace(seed=result.seed))),
        write_text(os.path.join(out_dir, f"metrics.{ext}"),
                   format_rows(metric_rows, ("seed", "metric", "value", "seed_hash"), fmt)),
        write_text(os.path.join(out_dir, f"series.{ext}"), format_rows(series_rows, result.SERIES_COLUMNS, fmt)),
        write_text(os.path.join(out_dir, f"windows.{ext}"),
                   format_rows(windows, ("window",) + DETECTION_METRICS, fmt)),
        write_text(os.path.join(out_dir, f"counters.{ext}"), format_rows(counter_rows, ("counter", "value"), fmt)),
    ]
