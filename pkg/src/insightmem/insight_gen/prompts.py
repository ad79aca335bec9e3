"""Prompt templates and their instantiation."""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

from ..core import ENVIRONMENT, GENERAL, SUBTASK, Experience, Insight, InsightDatabase
from ..experience_select import ExperiencePair

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z_ ]*)\}")
_ENV_BLOCK = re.compile(r"\[\[env\]\](.*?)\[\[/env\]\]", re.S)

EMPTY_SECTION = "(none)"


def load_template(name: str, template_dir: Optional[Path] = None) -> str:
    """Read ``<name>.txt`` from ``template_dir`` or from the packaged defaults."""
    if template_dir is not None:
        path = Path(template_dir) / f"{name}.txt"
        if path.exists():
            return path.read_text(encoding="utf-8")
    return resources.files("insightmem").joinpath("templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def fill(template: str, values: dict, with_env: bool = True) -> str:
    """Substitute ``{name}`` placeholders; unknown placeholders are left alone.

    Text between ``[[env]]`` and ``[[/env]]`` is kept only when ``with_env``.
    """
    template = _ENV_BLOCK.sub(lambda m: m.group(1) if with_env else "", template)
    return _PLACEHOLDER.sub(lambda m: str(values[m.group(1)]) if m.group(1) in values else m.group(0), template)


@dataclass(frozen=True)
class Candidate:
    number: int
    insight: Insight


def candidate_insights_for_seed(db: InsightDatabase, env_category: Optional[str]) -> list[Candidate]:
    """General insights, then matching-environment ones (only with a category), then all subtask ones."""
    items = list(db.by_scale(GENERAL))
    if env_category is not None:
        items += db.by_scale(ENVIRONMENT, env_category)
    items += db.by_scale(SUBTASK)
    return [Candidate(n, ins) for n, ins in db.display_numbers(items)]


def format_rule(number: int, insight: Insight) -> str:
    if insight.scale.kind == SUBTASK:
        return f"{number}. {insight.text} (TASK: {insight.scale.name})"
    return f"{number}. {insight.text}"


def format_section(candidates: Sequence[Candidate], kind: str) -> str:
    lines = [format_rule(c.number, c.insight) for c in candidates if c.insight.scale.kind == kind]
    return "\n".join(lines) if lines else EMPTY_SECTION


def format_trajectory(exp: Experience) -> str:
    lines = [f"Task: {exp.user_query}"]
    if exp.task_background:
        lines.append(f"Background: {exp.task_background}")
    if exp.env_category:
        lines.append(f"Environment: {exp.env_category}")
    lines.append("Plan:")
    lines += [f"  {i}. {step}" for i, step in enumerate(exp.plan, 1)] or ["  (empty)"]
    lines.append("Execution:")
    if exp.executed_steps:
        for i, rec in enumerate(exp.executed_steps):
            fb = exp.feedback[i] if i < len(exp.feedback) else ""
            status = "ok" if rec.get("ok") else "failed"
            lines.append(f"  {rec.get('step', '?')} -> {status}: {fb}")
    else:
        lines += [f"  {fb}" for fb in exp.feedback] or ["  (nothing executed)"]
    o = exp.outcome
    lines.append(f"Result: {'success' if o.success else 'failure'} ({o.scn}/{o.gcn} goal conditions met)")
    return "\n".join(lines)


Seed = Union[Experience, ExperiencePair]


def seed_env(seed: Seed) -> Optional[str]:
    return seed.success.env_category if isinstance(seed, ExperiencePair) else seed.env_category


def build_generation_prompt(seed: Seed, candidates: Sequence[Candidate], mode: str,
                            template_dir: Optional[Path] = None) -> str:
    if mode == "pair":
        if not isinstance(seed, ExperiencePair):
            raise ValueError("pair mode needs an ExperiencePair seed")
        success, failure = seed.success, seed.failure
    elif mode == "success":
        if not isinstance(seed, Experience):
            raise ValueError("success mode needs a single Experience seed")
        success, failure = seed, None
    else:
        raise ValueError(f"unknown generation mode {mode!r}")

    env = success.env_category
    n_general = sum(1 for c in candidates if c.insight.scale.kind == GENERAL)
    values = {
        "env": env or "",
        "instruction": success.user_query,
        "Succeeded Trajectories": format_trajectory(success),
        "Failed Trajectories": format_trajectory(failure) if failure is not None else "",
        "general rules": format_section(candidates, GENERAL),
        "environment rules": format_section(candidates, ENVIRONMENT),
        "task rules": format_section(candidates, SUBTASK),
        "n_general": n_general,
        "next_part": "environment" if env else "task",
        "next_part_first": n_general + 1,
    }
    template = load_template(f"generation_{mode}", template_dir)
    return fill(template, values, with_env=env is not None)
