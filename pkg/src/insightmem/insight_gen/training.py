"""One generation cycle per seed, and the training loop over all seeds."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ..core import InsightDatabase, InsightMemError
from ..llm import ChatRequest
from .applier import UpdateReport, apply_operations
from .parser import parse_operations
from .prompts import Seed, build_generation_prompt, candidate_insights_for_seed, seed_env

log = logging.getLogger(__name__)


def update_database(db: InsightDatabase, seed: Seed, mode: str, llm, model: str = "mock",
                    temperature: float = 0.0, max_output_tokens: int = 1024,
                    template_dir: Optional[Path] = None) -> UpdateReport:
    """candidates -> prompt -> completion -> parse -> apply, for one seed."""
    db._check_mutable()
    env = seed_env(seed)
    candidates = candidate_insights_for_seed(db, env)
    prompt = build_generation_prompt(seed, candidates, mode, template_dir)
    resp = llm.complete(ChatRequest.user(prompt, model, temperature=temperature,
                                         max_output_tokens=max_output_tokens))
    parsed = parse_operations(resp.content)
    report = UpdateReport(dropped=list(parsed.dropped), diagnostics=list(parsed.diagnostics))
    return apply_operations(db, parsed.operations, candidates, env, report)


@dataclass
class SeedOutcome:
    index: int
    seed_id: str
    report: Optional[UpdateReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        d = {"index": self.index, "seed": self.seed_id, "ok": self.ok}
        if self.error is not None:
            d["error"] = self.error
        if self.report is not None:
            d["report"] = self.report.to_dict()
        return d


@dataclass
class TrainingReport:
    seeds: list = field(default_factory=list)

    @property
    def failed(self) -> list:
        return [s for s in self.seeds if not s.ok]

    @property
    def applied_count(self) -> int:
        return sum(len(s.report.applied) for s in self.seeds if s.report)

    def jsonl(self) -> str:
        import json
        return "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in self.seeds)


def seed_id(seed: Seed) -> str:
    if hasattr(seed, "failure"):
        return f"{seed.success.id}|{seed.failure.id}"
    return seed.id


def run_training(db: InsightDatabase, seeds: Sequence[Seed], mode: str, llm, model: str = "mock",
                 fail_fast: bool = False, freeze: bool = True, **kw) -> tuple[InsightDatabase, TrainingReport]:
    """Consume seeds in order, then freeze the database.

    Seed errors are recorded and training continues unless ``fail_fast``.
    """
    db._check_mutable()
    report = TrainingReport()
    for i, seed in enumerate(seeds):
        outcome = SeedOutcome(i, seed_id(seed))
        try:
            outcome.report = update_database(db, seed, mode, llm, model=model, **kw)
        except InsightMemError as exc:
            if fail_fast:
                raise
            log.warning("seed %d (%s) failed: %s", i, outcome.seed_id, exc)
            outcome.error = f"{type(exc).__name__}: {exc}"
        report.seeds.append(outcome)
    if freeze:
        db.freeze()
    return db, report
