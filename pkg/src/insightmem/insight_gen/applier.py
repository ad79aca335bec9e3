"""Apply parsed rule operations to the insight database."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..core import ENVIRONMENT, GENERAL, SCALE_ORDER, InsightDatabase, InsightScale
from .parser import AtomicOperation
from .prompts import Candidate


@dataclass(frozen=True)
class AppliedOperation:
    op: AtomicOperation
    insight_id: Optional[int]  # created or touched insight
    score: Optional[int]  # None when the insight was discarded
    removed_id: Optional[int] = None  # MOVE source

    def to_dict(self) -> dict:
        return {"op": self.op.to_dict(), "insight_id": self.insight_id,
                "score": self.score, "removed_id": self.removed_id}


@dataclass
class UpdateReport:
    applied: list = field(default_factory=list)
    dropped: list = field(default_factory=list)  # (AtomicOperation, reason)
    diagnostics: list = field(default_factory=list)

    @property
    def section_counts(self) -> dict:
        counts = {k: {"applied": 0, "dropped": 0} for k in SCALE_ORDER}
        for a in self.applied:
            counts[a.op.section]["applied"] += 1
        for op, _ in self.dropped:
            counts[op.section]["dropped"] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "applied": [a.to_dict() for a in self.applied],
            "dropped": [{"op": op.to_dict(), "reason": r} for op, r in self.dropped],
            "diagnostics": list(self.diagnostics),
            "section_counts": self.section_counts,
        }


def _norm(text: Optional[str]) -> str:
    return " ".join((text or "").split()).rstrip(".").casefold()


def _section_scale(op: AtomicOperation, env_category: Optional[str]) -> Optional[InsightScale]:
    if op.section == GENERAL:
        return InsightScale.general()
    if op.section == ENVIRONMENT:
        return InsightScale.environment(env_category) if env_category else None
    return InsightScale.subtask(op.subtask_name)


def apply_operations(db: InsightDatabase, ops: Sequence[AtomicOperation], candidates: Sequence[Candidate],
                     env_category: Optional[str], report: Optional[UpdateReport] = None) -> UpdateReport:
    """Apply ``ops`` in section order general, environment, subtask.

    Rule numbers resolve through ``candidates`` (the numbering shown in the
    prompt), so deletions mid-update never shift later targets.
    """
    db._check_mutable()
    report = report if report is not None else UpdateReport()
    by_number = {c.number: c.insight.id for c in candidates}
    ordered = sorted(ops, key=lambda o: SCALE_ORDER.index(o.section))  # stable within a section

    for op in ordered:
        if op.kind == "ADD":
            scale = _section_scale(op, env_category)
            if scale is None:
                report.dropped.append((op, "environment rule but the seed has no environment category"))
                continue
            ins = db.add(scale, op.text)
            report.applied.append(AppliedOperation(op, ins.id, ins.score))
            continue

        target = by_number.get(op.rule_number)
        if target is None:
            report.dropped.append((op, f"rule {op.rule_number} is not an existing rule"))
            continue
        if target not in db:
            report.dropped.append((op, f"rule {op.rule_number} no longer exists"))
            continue

        if op.kind == "AGREE":
            existing = db.get(target).text
            if op.text and _norm(op.text) != _norm(existing):
                report.diagnostics.append(f"AGREE {op.rule_number}: quoted text differs from stored rule")
            ins = db.rescore(target, +1)
            report.applied.append(AppliedOperation(op, target, ins.score))
        elif op.kind == "EDIT":
            ins = db.edit(target, op.text)
            report.applied.append(AppliedOperation(op, target, ins.score))
        elif op.kind == "REMOVE":
            ins = db.rescore(target, -1)
            report.applied.append(AppliedOperation(op, target, None if ins is None else ins.score))
        elif op.kind == "MOVE":
            scale = _section_scale(op, env_category)
            if scale is None:
                report.dropped.append((op, "MOVE into environment rules but the seed has no environment category"))
                continue
            db.remove(target)
            ins = db.add(scale, op.text)
            report.applied.append(AppliedOperation(op, ins.id, ins.score, removed_id=target))
    return report
