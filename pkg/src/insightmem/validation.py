"""Input validation helpers for the estimator API."""
from __future__ import annotations

from typing import Optional

from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .core import Experience, ExperienceStore, InsightDatabase, InsightMemError

__all__ = ["NotFittedError", "check_is_fitted", "check_experiences", "check_database", "check_queries"]


def check_experiences(X) -> list[Experience]:
    """Accept an ExperienceStore, Experiences, or experience dicts; return a list of Experiences."""
    if isinstance(X, ExperienceStore):
        return list(X)
    if isinstance(X, (str, bytes, dict)):
        raise TypeError("expected a collection of experiences")
    out = []
    for i, item in enumerate(X):
        if isinstance(item, Experience):
            out.append(item)
        elif isinstance(item, dict):
            out.append(Experience.from_dict(item))
        else:
            raise TypeError(f"item {i}: expected Experience, got {type(item).__name__}")
    ids = [e.id for e in out]
    if len(set(ids)) != len(ids):
        raise ValueError("experience ids must be unique")
    return out


def check_database(db, frozen: Optional[bool] = None) -> InsightDatabase:
    if not isinstance(db, InsightDatabase):
        raise TypeError(f"expected InsightDatabase, got {type(db).__name__}")
    if frozen is True and not db.frozen:
        raise InsightMemError("this operation needs a frozen insight database")
    if frozen is False and db.frozen:
        raise InsightMemError("this operation needs an unfrozen insight database")
    return db


def check_queries(X) -> list[tuple[str, Optional[str]]]:
    """Normalize queries to ``(user_query, env_category)`` pairs.

    Items may be strings, ``(query, env)`` tuples, or objects exposing
    ``user_query`` and optionally ``env_category`` (experiences, tasks).
    """
    if isinstance(X, str):
        X = [X]
    out = []
    for item in X:
        if isinstance(item, str):
            q, env = item, None
        elif isinstance(item, tuple) and len(item) == 2:
            q, env = item
        elif hasattr(item, "user_query"):
            q, env = item.user_query, getattr(item, "env_category", None)
        else:
            raise TypeError(f"cannot read a query from {type(item).__name__}")
        if not q or not str(q).strip():
            raise ValueError("queries must be non-empty")
        out.append((str(q), env))
    return out
