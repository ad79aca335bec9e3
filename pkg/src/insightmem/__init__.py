"""Multi-scale insight memory for LLM agents.

Harvest task experiences, summarize them into a scored insight database
(general, environment and subtask scales), and select the insights that
fit a new task.
"""
from .core import (Experience, ExperienceStore, FrozenDatabaseError, Insight, InsightDatabase,
                   InsightMemError, InsightScale, OutcomeRecord, UnknownInsightError)
from .embedder import LocalHashEmbedder, RemoteEmbedder, cosine
from .estimators import InsightSelector, InsightSummarizer
from .experience_select import EmptyFailureSet, ExperiencePair, select_pairs, select_success
from .insight_select import InsightSelection, count_tokens, render_insight_block
from .llm import ChatRequest, ChatResponse, RemoteChatLLM, ReplayCache, ScriptedLLM
from .metrics import EpisodeRecord, gc_acc, gc_plw, sr_acc, sr_plw

__version__ = "0.1.0"

__all__ = [
    "ChatRequest", "ChatResponse", "EmptyFailureSet", "EpisodeRecord", "Experience", "ExperiencePair",
    "ExperienceStore", "FrozenDatabaseError", "Insight", "InsightDatabase", "InsightMemError",
    "InsightScale", "InsightSelection", "InsightSelector", "InsightSummarizer", "LocalHashEmbedder",
    "OutcomeRecord", "RemoteChatLLM", "RemoteEmbedder", "ReplayCache", "ScriptedLLM", "UnknownInsightError",
    "cosine", "count_tokens", "gc_acc", "gc_plw", "render_insight_block", "select_pairs", "select_success",
    "sr_acc", "sr_plw",
]
