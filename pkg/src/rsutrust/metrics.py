"""Detection-quality and network metrics computed from a finished run."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

COMPROMISED = "compromised"
LEGITIMATE = "legitimate"

DETECTION_METRICS = ("fpr", "fnr", "precision", "recall", "accuracy")
NETWORK_METRICS = ("pdr", "throughput_pps", "throughput_bps", "ae2e")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


def _score(flagged: bool, malicious: bool) -> ConfusionCounts:
    if malicious:
        return ConfusionCounts(tp=1) if flagged else ConfusionCounts(fn=1)
    return ConfusionCounts(fp=1) if flagged else ConfusionCounts(tn=1)


def system_verdicts(final: Mapping[Tuple[int, int], Optional[str]]) -> Dict[int, Optional[str]]:
    """Majority of each RSU's evaluators; a tie counts as compromised. Unjudged RSUs map to None."""
    votes: Dict[int, List[str]] = defaultdict(list)
    subjects = set()
    for (_, subject), c in final.items():
        subjects.add(subject)
        if c is not None:
            votes[subject].append(c)
    out: Dict[int, Optional[str]] = {}
    for subject in sorted(subjects):
        v = votes.get(subject)
        if not v:
            out[subject] = None
            continue
        bad = sum(1 for c in v if c == COMPROMISED)
        out[subject] = COMPROMISED if 2 * bad >= len(v) else LEGITIMATE
    return out


def confusion(final: Mapping[Tuple[int, int], Optional[str]], malicious: Iterable[int],
              scoring: str = "consensus") -> ConfusionCounts:
    """Score final classifications against the true roles.

    scoring="consensus" scores one verdict per RSU; "pair" scores every
    (evaluator, subject) classification separately.
    """
    bad = set(malicious)
    total = ConfusionCounts()
    if scoring == "consensus":
        for subject, verdict in system_verdicts(final).items():
            if verdict is not None:
                total = total + _score(verdict == COMPROMISED, subject in bad)
    elif scoring == "pair":
        for (_, subject), c in sorted(final.items()):
            if c is not None:
                total = total + _score(c == COMPROMISED, subject in bad)
    else:
        raise ValueError(f"unknown scoring {scoring!r}")
    return total


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den > 0 else None


def detection_metrics(c: ConfusionCounts) -> Dict[str, Optional[float]]:
    """Five rates; a metric whose denominator is zero is None (undefined), never 0."""
    return {
        "fpr": _ratio(c.fp, c.fp + c.tn),
        "fnr": _ratio(c.fn, c.fn + c.tp),
        "precision": _ratio(c.tp, c.tp + c.fp),
        "recall": _ratio(c.tp, c.tp + c.fn),
        "accuracy": _ratio(c.tp + c.tn, c.total),
    }


def network_metrics(sent: int, received: int, latencies: Sequence[float], duration: float,
                    packet_bytes: float = 0.0) -> Dict[str, Optional[float]]:
    if duration <= 0:
        raise ValueError("duration must be positive")
    if received > sent:
        raise ValueError("received cannot exceed sent")
    return {
        "pdr": _ratio(received, sent),
        "throughput_pps": received / duration,
        "throughput_bps": received * packet_bytes * 8 / duration,
        "ae2e": sum(latencies) / len(latencies) if latencies else None,
    }


def run_metrics(result, scoring: Optional[str] = None) -> Dict[str, Optional[float]]:
    """Detection and network metrics of one RunResult."""
    cfg = result.config
    c = confusion(result.final, result.malicious_rsus, scoring or cfg.metrics.scoring)
    out: Dict[str, Optional[float]] = {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}
    out.update(detection_metrics(c))
    n = result.network
    out.update(network_metrics(n.injected, n.delivered, n.latencies, cfg.scenario.sim_duration,
                               cfg.routing.packet_bytes))
    return out


def window_metrics(result, scoring: Optional[str] = None) -> List[Dict[str, Optional[float]]]:
    """Detection metrics after each observation window, from the trust time series."""
    cols = result.SERIES_COLUMNS
    wi, ei, si, ci = (cols.index(k) for k in ("window", "evaluator", "subject", "classification"))
    by_window: Dict[int, Dict[Tuple[int, int], str]] = defaultdict(dict)
    for row in result.series:
        by_window[row[wi]][(row[ei], row[si])] = row[ci]
    one_hop = {(p, m) for p, row in enumerate(result.neighbors) for m in row}
    latest: Dict[Tuple[int, int], Optional[str]] = {k: None for k in one_hop}
    out = []
    for w in sorted(by_window):
        for k, v in by_window[w].items():
            if k in latest:
                latest[k] = v
        c = confusion(latest, result.malicious_rsus, scoring or result.config.metrics.scoring)
        row: Dict[str, Optional[float]] = {"window": w}
        row.update(detection_metrics(c))
        out.append(row)
    return out
