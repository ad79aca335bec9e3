"""Pick the insights that accompany a new task.

General insights (and those for the task's environment) are always
included; strategies differ only in which subtask insights they keep.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import ENVIRONMENT, GENERAL, SUBTASK, Insight, InsightDatabase, InsightMemError
from .embedder import cosine
from .insight_gen.prompts import fill, load_template
from .llm import ChatRequest

STRATEGIES = ("hashmap", "vector", "general_only", "flat", "none")
DEFAULT_BUDGET = 2000


def count_tokens(text: str, tokenizer: Optional[Callable[[str], int]] = None) -> int:
    """Token estimate: ceil(utf-8 bytes / 4) unless an exact tokenizer is supplied."""
    if tokenizer is not None:
        return int(tokenizer(text))
    return math.ceil(len(text.encode("utf-8")) / 4)


@dataclass
class InsightSelection:
    strategy: str
    general: list = field(default_factory=list)
    environment: list = field(default_factory=list)
    subtask: list = field(default_factory=list)
    token_cost: int = 0
    diagnostics: list = field(default_factory=list)
    subtask_names: list = field(default_factory=list)

    @property
    def chosen(self) -> list[Insight]:
        return self.general + self.environment + self.subtask

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "chosen": [{"id": i.id, "scale": i.scale.to_dict(), "text": i.text} for i in self.chosen],
            "subtask_names": list(self.subtask_names),
            "diagnostics": list(self.diagnostics),
            "token_cost": self.token_cost,
        }


def _require_frozen(db: InsightDatabase):
    if not db.frozen:
        raise InsightMemError("insight selection needs a frozen database")


def _base(db: InsightDatabase, strategy: str, env_category: Optional[str]) -> InsightSelection:
    sel = InsightSelection(strategy, general=db.by_scale(GENERAL))
    if env_category is not None:
        sel.environment = db.by_scale(ENVIRONMENT, env_category)
    return sel


def _subtask_cost(sel: InsightSelection, tokenizer=None) -> int:
    return sum(count_tokens(i.text, tokenizer) for i in sel.subtask)


def _name_key(name: str) -> str:
    return " ".join(name.split()).casefold()


_SPLIT = re.compile(r"[,\n;]")
_STRIP = " \t\"'`*-•[]().:"


def select_hashmap(db: InsightDatabase, user_query: str, llm, env_category: Optional[str] = None,
                   model: str = "mock", template_dir=None) -> InsightSelection:
    """Ask the LLM which known subtask names fit the query; keep every insight under those names."""
    _require_frozen(db)
    sel = _base(db, "hashmap", env_category)
    names = db.subtask_names()
    if not names:
        return sel
    prompt = fill(load_template("hashmap_select", template_dir),
                  {"task names": ", ".join(names), "dialogue": user_query})
    answer = llm.complete(ChatRequest.user(prompt, model)).content
    known = {_name_key(n): n for n in names}
    picked: list[str] = []
    for raw in _SPLIT.split(answer):
        token = raw.strip(_STRIP)
        if not token:
            continue
        if token.lower().startswith("answer:"):
            token = token[7:].strip(_STRIP)
        name = known.get(_name_key(token))
        if name is None:
            sel.diagnostics.append(f"unknown task name {token!r}")
        elif name not in picked:
            picked.append(name)
    sel.subtask_names = picked
    wanted = {_name_key(n) for n in picked}
    sel.subtask = [i for i in db.by_scale(SUBTASK) if _name_key(i.scale.name) in wanted]
    sel.token_cost = _subtask_cost(sel)
    return sel


def rank_by_similarity(db: InsightDatabase, user_query: str, embedder) -> list[tuple[float, Insight]]:
    qv = embedder.embed(user_query)
    scored = [(cosine(embedder.embed(i.text), qv), i) for i in db.by_scale(SUBTASK)]
    scored.sort(key=lambda t: (-t[0], t[1].id))
    return scored


def select_vector(db: InsightDatabase, user_query: str, embedder, budget_tokens: int = DEFAULT_BUDGET,
                  env_category: Optional[str] = None, tokenizer=None) -> InsightSelection:
    """Cosine-ranked subtask insights, longest prefix within the token budget."""
    _require_frozen(db)
    if budget_tokens <= 0:
        raise ValueError("budget_tokens must be positive")
    sel = _base(db, "vector", env_category)
    used = 0
    for _, ins in rank_by_similarity(db, user_query, embedder):
        cost = count_tokens(ins.text, tokenizer)
        if used + cost > budget_tokens:
            break
        sel.subtask.append(ins)
        used += cost
    sel.subtask_names = list(dict.fromkeys(i.scale.name for i in sel.subtask))
    sel.token_cost = used
    return sel


def select_general_only(db: InsightDatabase, env_category: Optional[str] = None) -> InsightSelection:
    _require_frozen(db)
    return _base(db, "general_only", env_category)


def select_flat(db: InsightDatabase) -> InsightSelection:
    """Every stored insight, unfiltered (single-list ablation)."""
    _require_frozen(db)
    sel = InsightSelection("flat", general=db.by_scale(GENERAL), environment=db.by_scale(ENVIRONMENT),
                           subtask=db.by_scale(SUBTASK))
    sel.subtask_names = db.subtask_names()
    sel.token_cost = _subtask_cost(sel)
    return sel


def select_none() -> InsightSelection:
    return InsightSelection("none")


SECTION_TITLES = (("general", "GENERAL INSIGHTS:"), ("environment", "ENVIRONMENT INSIGHTS:"),
                  ("subtask", "SUBTASK INSIGHTS:"))


def render_insight_block(selection: InsightSelection) -> str:
    lines: list[str] = []
    n = 0
    for attr, title in SECTION_TITLES:
        items = getattr(selection, attr)
        if not items:
            continue
        lines.append(title)
        for ins in items:
            n += 1
            suffix = f" (TASK: {ins.scale.name})" if ins.scale.kind == SUBTASK else ""
            lines.append(f"{n}. {ins.text}{suffix}")
    return "\n".join(lines)
