"""Estimator-style wrappers around insight summarization and selection.

``InsightSummarizer.fit(experiences)`` learns a frozen insight database;
``InsightSelector.fit(database).transform(queries)`` returns one
selection per query. Both expose ``get_params``/``set_params`` through
scikit-learn's ``BaseEstimator``.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .core import DEFAULT_ENVIRONMENTS, ExperienceStore, InsightDatabase
from .embedder import LocalHashEmbedder
from .experience_select import select_failures, select_pairs, select_success
from .insight_gen.training import TrainingReport, run_training
from .insight_select import (DEFAULT_BUDGET, STRATEGIES, render_insight_block, select_flat,
                             select_general_only, select_hashmap, select_none, select_vector)
from .validation import check_database, check_experiences, check_is_fitted, check_queries


def _default_llm(llm):
    if llm is not None:
        return llm
    from .toyworld.scripts import toy_mock_llm
    return toy_mock_llm()


class InsightSummarizer(BaseEstimator):
    """Summarize experiences into a multi-scale insight database.

    Parameters
    ----------
    llm : chat backend with ``complete(request)``; None uses the toy-world script.
    mode : "pair" (success/failure pairs) or "success" (successes only).
    embedder : query embedder for pair matching; None uses the local hashed embedder.
    model : model name sent with generation requests.
    fail_fast : stop on the first failing seed instead of recording it.

    Attributes
    ----------
    database_ : frozen InsightDatabase
    report_ : TrainingReport of the most recent fit / partial_fit
    seeds_ : seeds consumed by the most recent fit / partial_fit
    """

    def __init__(self, llm=None, mode="pair", embedder=None, model="mock", fail_fast=False,
                 environments=DEFAULT_ENVIRONMENTS, template_dir=None):
        self.llm = llm
        self.mode = mode
        self.embedder = embedder
        self.model = model
        self.fail_fast = fail_fast
        self.environments = environments
        self.template_dir = template_dir

    def make_seeds(self, X) -> list:
        store = X if isinstance(X, ExperienceStore) else None
        experiences = check_experiences(X)
        successes = select_success(experiences)
        if self.mode == "success":
            return successes
        if self.mode != "pair":
            raise ValueError(f"mode must be 'pair' or 'success', got {self.mode!r}")
        embedder = self.embedder if self.embedder is not None else LocalHashEmbedder()
        return select_pairs(successes, select_failures(experiences), embedder, store)

    def _train(self, db: InsightDatabase, X):
        self.seeds_ = self.make_seeds(X)
        self.database_, self.report_ = run_training(
            db, self.seeds_, self.mode, _default_llm(self.llm), model=self.model,
            fail_fast=self.fail_fast, template_dir=self.template_dir)
        return self

    def fit(self, X, y=None):
        return self._train(InsightDatabase(environments=tuple(self.environments)), X)

    def partial_fit(self, X, y=None):
        """Continue updating the learned database with more experiences, then refreeze."""
        if not hasattr(self, "database_"):
            return self.fit(X)
        return self._train(self.database_.thawed_copy(), X)


class InsightSelector(TransformerMixin, BaseEstimator):
    """Select task-relevant insights from a frozen database.

    ``strategy`` is one of hashmap, vector, general_only, flat, none.
    ``transform`` accepts query strings, ``(query, env)`` tuples, or
    objects with ``user_query``/``env_category`` and returns InsightSelections.
    """

    def __init__(self, strategy="hashmap", llm=None, embedder=None, budget_tokens=DEFAULT_BUDGET,
                 model="mock", tokenizer=None, template_dir=None):
        self.strategy = strategy
        self.llm = llm
        self.embedder = embedder
        self.budget_tokens = budget_tokens
        self.model = model
        self.tokenizer = tokenizer
        self.template_dir = template_dir

    def fit(self, X, y=None):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        self.database_ = check_database(X, frozen=True)
        return self

    def select(self, user_query: str, env_category=None):
        check_is_fitted(self, "database_")
        db = self.database_
        if self.strategy == "hashmap":
            return select_hashmap(db, user_query, _default_llm(self.llm), env_category, self.model,
                                  self.template_dir)
        if self.strategy == "vector":
            embedder = self.embedder if self.embedder is not None else LocalHashEmbedder()
            return select_vector(db, user_query, embedder, self.budget_tokens, env_category, self.tokenizer)
        if self.strategy == "general_only":
            return select_general_only(db, env_category)
        if self.strategy == "flat":
            return select_flat(db)
        return select_none()

    def transform(self, X):
        return [self.select(q, env) for q, env in check_queries(X)]

    def render(self, X) -> list[str]:
        return [render_insight_block(s) for s in self.transform(X)]


__all__ = ["InsightSelector", "InsightSummarizer", "TrainingReport"]
