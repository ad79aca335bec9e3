"""Success-rate and goal-condition metrics, plain and path-length weighted."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import InsightMemError


class EmptyRecordSet(InsightMemError, ValueError):
    pass


@dataclass(frozen=True)
class EpisodeRecord:
    scn: int
    gcn: int
    l_pred: int
    l_ref: int

    def __post_init__(self):
        if self.gcn < 1 or self.scn < 0 or self.scn > self.gcn:
            raise ValueError(f"need 0 <= scn <= gcn and gcn >= 1, got scn={self.scn} gcn={self.gcn}")
        if self.l_ref < 1:
            raise ValueError("l_ref must be positive")
        if self.l_pred < 0:
            raise ValueError("l_pred must be non-negative")

    @property
    def success(self) -> bool:
        return self.scn == self.gcn

    @property
    def path_weight(self) -> float:
        return self.l_ref ** 2 / max(self.l_pred, self.l_ref)

    def to_dict(self) -> dict:
        return {"scn": self.scn, "gcn": self.gcn, "l_pred": self.l_pred, "l_ref": self.l_ref}


def _records(records: Iterable[EpisodeRecord]) -> Sequence[EpisodeRecord]:
    records = list(records)
    if not records:
        raise EmptyRecordSet("metrics need at least one episode record")
    return records


def sr_acc(records) -> float:
    records = _records(records)
    return sum(r.success for r in records) / len(records)


def gc_acc(records) -> float:
    records = _records(records)
    return sum(r.scn for r in records) / sum(r.gcn for r in records)


def sr_plw(records) -> float:
    records = _records(records)
    return sum(r.path_weight for r in records if r.success) / sum(r.l_ref for r in records)


def gc_plw(records) -> float:
    records = _records(records)
    return sum((r.scn / r.gcn) * r.path_weight for r in records) / sum(r.l_ref for r in records)


# which metrics a benchmark family reports
FAMILY_METRICS = {"teach": ("sr_acc", "sr_plw", "gc_acc", "gc_plw"), "alfworld": ("sr_acc",)}
_FUNCS = {"sr_acc": sr_acc, "sr_plw": sr_plw, "gc_acc": gc_acc, "gc_plw": gc_plw}


def compute_all(records, family: str = "teach") -> dict:
    records = _records(records)
    return {name: _FUNCS[name](records) for name in FAMILY_METRICS[family]}


def fmt_pair(acc: float, plw: float | None) -> str:
    """'12.70 (2.60)' style, percentages with the PLW variant in parentheses."""
    if plw is None:
        return f"{acc * 100:.2f}"
    return f"{acc * 100:.2f} ({plw * 100:.2f})"


def metrics_table(rows: dict) -> str:
    """Aligned text table; ``rows`` maps a label to a ``compute_all`` dict."""
    header = ("run", "SR", "GC")
    body = []
    for label, m in rows.items():
        sr = fmt_pair(m["sr_acc"], m.get("sr_plw"))
        gc = fmt_pair(m["gc_acc"], m.get("gc_plw")) if "gc_acc" in m else "-"
        body.append((label, sr, gc))
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(3)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in body]
    return "\n".join(lines)


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
