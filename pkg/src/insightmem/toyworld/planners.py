"""Planners: map (background, query, insight block) to a plan.

The scripted planners stand in for an LLM executor. ``ObedientPlanner``
follows any directive it reads in the insight block; when two directives
contradict, the one read last wins.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, replace

from ..insight_gen.prompts import fill, load_template
from ..llm import ChatRequest
from .tasks import CONFLICTS, DIRECTIVES, NAIVE, Policy, identify, steps_from_tuples
from .world import PlanStep


@dataclass(frozen=True)
class PlannerInput:
    task_background: str
    user_query: str
    insight_block: str = ""
    feedback_history: tuple = ()


_PHRASES = {k: v.lower().rstrip(".") for k, v in DIRECTIVES.items()}


def read_directives(block: str) -> list[str]:
    """Directive ids mentioned in ``block``, in reading order."""
    found = []
    for line in block.lower().splitlines():
        for key, phrase in _PHRASES.items():
            if phrase in line:
                found.append(key)
    return found


def policy_from_insights(block: str) -> Policy:
    policy = NAIVE
    for key in read_directives(block):
        slot = CONFLICTS.get(key)
        if slot == "heater":
            policy = replace(policy, heater="open" if key == "open_heater" else "close")
        elif slot == "order":
            policy = replace(policy, order=key)
        elif key == "open_container":
            policy = replace(policy, open_container=True)
    return policy


def plan_for(query: str, policy: Policy) -> list[PlanStep]:
    found = identify(query)
    if found is None:
        return []
    fam, obj = found
    return steps_from_tuples(fam.plan(obj, policy))


class NaivePlanner:
    """Ignores insights entirely."""

    def __call__(self, inp: PlannerInput) -> list[PlanStep]:
        return plan_for(inp.user_query, NAIVE)


class ObedientPlanner:
    def __call__(self, inp: PlannerInput) -> list[PlanStep]:
        return plan_for(inp.user_query, policy_from_insights(inp.insight_block))


class ExplorerPlanner:
    """Training-time policy: uses the correct fix with probability ``p``, else plans naively.

    The coin is seeded per (seed, background, query), so runs are reproducible.
    """

    def __init__(self, seed: int = 0, p: float = 0.5):
        self.seed = seed
        self.p = p

    def __call__(self, inp: PlannerInput) -> list[PlanStep]:
        found = identify(inp.user_query)
        if found is None:
            return []
        fam, obj = found
        rng = random.Random(f"explore|{self.seed}|{inp.task_background}|{inp.user_query}")
        if rng.random() < self.p:
            policy = fam.correct
        else:
            # mishandle the hazard; where naive is already right, flip the ordering choice
            policy = NAIVE if fam.correct != NAIVE else Policy(order="wash_first")
        return steps_from_tuples(fam.plan(obj, policy))


def parse_plan_text(text: str) -> list[PlanStep]:
    """Lenient plan parser for LLM output: one action per line, bullets/numbers allowed."""
    steps = []
    for line in text.splitlines():
        line = line.strip().lstrip("-*•").strip()
        if line[:1].isdigit():
            line = line.split(maxsplit=1)[1] if " " in line else ""
        try:
            steps.append(PlanStep.parse(line))
        except ValueError:
            continue
    return steps


class LLMPlanner:
    """Plans through a chat backend using the executor template."""

    def __init__(self, llm, model: str = "mock", template_dir=None):
        self.llm = llm
        self.model = model
        self.template_dir = template_dir

    def prompt(self, inp: PlannerInput) -> str:
        return fill(load_template("executor", self.template_dir), {
            "background": inp.task_background,
            "experience": inp.insight_block or "(none)",
            "dialogue": inp.user_query,
        })

    def __call__(self, inp: PlannerInput) -> list[PlanStep]:
        text = self.llm.complete(ChatRequest.user(self.prompt(inp), self.model)).content
        return parse_plan_text(text)


class FixedPlanner:
    """Always returns the same plan (test helper and scripted baselines)."""

    def __init__(self, steps):
        self.steps = [s if isinstance(s, PlanStep) else PlanStep.parse(s) for s in steps]

    def __call__(self, inp: PlannerInput) -> list[PlanStep]:
        return list(self.steps)


PLANNERS = ("obedient", "naive", "explorer", "llm")


def make_planner(kind: str, seed: int = 0, llm=None, model: str = "mock", template_dir=None):
    if kind == "obedient":
        return ObedientPlanner()
    if kind == "naive":
        return NaivePlanner()
    if kind == "explorer":
        return ExplorerPlanner(seed)
    if kind == "llm":
        if llm is None:
            raise ValueError("llm planner needs a chat backend")
        return LLMPlanner(llm, model, template_dir)
    raise ValueError(f"unknown planner {kind!r}")
