"""Insight generation: prompts, operation parsing, database updates."""
from .applier import AppliedOperation, UpdateReport, apply_operations
from .parser import MAX_OPS_PER_SECTION, AtomicOperation, ParseResult, parse_operations
from .prompts import Candidate, build_generation_prompt, candidate_insights_for_seed, format_trajectory
from .training import SeedOutcome, TrainingReport, run_training, update_database

__all__ = [
    "AppliedOperation", "AtomicOperation", "Candidate", "MAX_OPS_PER_SECTION", "ParseResult",
    "SeedOutcome", "TrainingReport", "UpdateReport", "apply_operations", "build_generation_prompt",
    "candidate_insights_for_seed", "format_trajectory", "parse_operations", "run_training",
    "update_database",
]
