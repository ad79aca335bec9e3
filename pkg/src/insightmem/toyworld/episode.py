"""Run one task with a planner and record the outcome."""
from __future__ import annotations

import logging
from typing import Optional

from ..core import Experience, InsightMemError, OutcomeRecord
from ..metrics import EpisodeRecord
from .planners import PlannerInput
from .tasks import TaskSpec
from .world import PlanStep, count_satisfied, step_world

log = logging.getLogger(__name__)


def run_episode(task: TaskSpec, planner, insight_block: str = "",
                max_steps: Optional[int] = None) -> tuple[Experience, EpisodeRecord]:
    """Plan once, execute step by step, score goal conditions at the end.

    ``max_steps`` defaults to three times the reference plan length.
    """
    max_steps = 3 * task.l_ref if max_steps is None else max_steps
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    state = task.initial_state()
    background = task.background()
    inp = PlannerInput(background, task.user_query, insight_block)

    feedback: list[str] = []
    executed: list[dict] = []
    try:
        plan = [s if isinstance(s, PlanStep) else PlanStep.parse(s) for s in planner(inp)]
    except (InsightMemError, ValueError) as exc:
        log.warning("planner failed on %s: %s", task.id, exc)
        plan = []
        feedback.append(f"planner error: {exc}")
    else:
        for step in plan[:max_steps]:
            state, fb, ok = step_world(state, step)
            feedback.append(fb)
            executed.append({"step": str(step), "ok": ok})

    goals = task.goal_conditions
    scn = count_satisfied(goals, state)
    outcome = OutcomeRecord.from_counts(scn, len(goals), len(executed))
    exp = Experience(
        id=task.id,
        env_category=task.env_category,
        task_background=background,
        user_query=task.user_query,
        plan=tuple(str(s) for s in plan),
        feedback=tuple(feedback),
        executed_steps=tuple(executed),
        outcome=outcome,
    )
    return exp, EpisodeRecord(scn, len(goals), len(executed), task.l_ref)
