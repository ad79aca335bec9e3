"""Seed selection: success mode and success/failure pair mode."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Experience, InsightMemError
from .embedder import cosine


# similarities closer than this count as a tie (float noise, not a real difference)
TIE_EPS = 1e-12


class EmptyFailureSet(InsightMemError):
    pass


@dataclass(frozen=True)
class ExperiencePair:
    success: Experience
    failure: Experience
    similarity: float


def select_success(experiences: Iterable[Experience]) -> list[Experience]:
    return [e for e in experiences if e.outcome.success]


def select_failures(experiences: Iterable[Experience]) -> list[Experience]:
    return [e for e in experiences if not e.outcome.success]


def select_pairs(successes: Sequence[Experience], failures: Sequence[Experience],
                 embedder, store=None) -> list[ExperiencePair]:
    """Pair each success with the failure whose user query is most similar.

    Ties go to the lowest failure id. A failure may be reused across pairs.
    ``store`` (an ExperienceStore) caches query embeddings when given.
    """
    if not failures:
        raise EmptyFailureSet("pair mode needs at least one failed experience")

    def emb(exp):
        return store.query_embedding(exp, embedder) if store is not None else embedder.embed(exp.user_query)

    fail_vecs = [(f, emb(f)) for f in sorted(failures, key=lambda f: f.id)]
    pairs = []
    for s in successes:
        sv = emb(s)
        best, best_sim = None, None
        for f, fv in fail_vecs:
            sim = cosine(sv, fv)
            # strictly greater keeps the earliest (lowest id) on ties
            if best_sim is None or sim > best_sim + TIE_EPS:
                best, best_sim = f, sim
        pairs.append(ExperiencePair(s, best, best_sim))
    return pairs
