"""Deterministic text household used to exercise the memory pipeline offline."""
from .episode import run_episode
from .planners import (ExplorerPlanner, FixedPlanner, LLMPlanner, NaivePlanner, ObedientPlanner,
                       PlannerInput, make_planner, policy_from_insights)
from .scripts import toy_mock_llm
from .tasks import ENVIRONMENTS, FAMILIES, SPLITS, TaskSpec, generate_tasks, identify
from .world import GoalCondition, PlanStep, WorldState, step_world

__all__ = [
    "ENVIRONMENTS", "FAMILIES", "SPLITS", "ExplorerPlanner", "FixedPlanner", "GoalCondition", "LLMPlanner",
    "NaivePlanner", "ObedientPlanner", "PlanStep", "PlannerInput", "TaskSpec", "WorldState",
    "generate_tasks", "identify", "make_planner", "policy_from_insights", "run_episode", "step_world",
    "toy_mock_llm",
]
