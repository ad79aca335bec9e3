"""End-to-end runs over the toy world: ingest, evaluate, domain shift."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from .core import ExperienceStore
from .estimators import InsightSelector, InsightSummarizer
from .insight_select import render_insight_block
from .metrics import compute_all
from .toyworld.episode import run_episode
from .toyworld.tasks import TaskSpec


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # map keeps input order


def ingest(tasks: Sequence[TaskSpec], planner, store: Optional[ExperienceStore] = None, workers: int = 1):
    """Run every task once with ``planner``; append the experiences to ``store``."""
    results = _map(lambda t: run_episode(t, planner), tasks, workers)
    if store is not None:
        for exp, _ in results:
            store.add(exp)
    return results


def evaluate(tasks: Sequence[TaskSpec], planner, selector: Optional[InsightSelector] = None,
             workers: int = 1, family: str = "teach") -> dict:
    """Episodes with selected insights injected; returns metrics and per-episode rows."""
    def one(task):
        if selector is None:
            sel = None
            block = ""
        else:
            sel = selector.select(task.user_query, task.env_category)
            block = render_insight_block(sel)
        exp, rec = run_episode(task, planner, block)
        return task, sel, exp, rec

    rows = _map(one, tasks, workers)
    records = [r[3] for r in rows]
    episodes = []
    for task, sel, exp, rec in rows:
        episodes.append({
            "task": task.id,
            "subtask": task.family,
            "env": task.env_category,
            **rec.to_dict(),
            "success": rec.success,
            "insights": [] if sel is None else [i.id for i in sel.chosen],
            "selected_names": [] if sel is None else list(sel.subtask_names),
        })
    return {"metrics": compute_all(records, family), "episodes": episodes, "records": records}


SHIFT_ORDER = ("kitchen", "living_room", "bedroom")


def domain_shift(experiences, eval_tasks: Sequence[TaskSpec], planner, summarizer: InsightSummarizer,
                 selectors: dict, stages: int = 3, order=SHIFT_ORDER, workers: int = 1) -> dict:
    """Update insights one environment at a time; after each stage, evaluate ``eval_tasks``.

    ``selectors`` maps a label to an (unfitted) InsightSelector. Returns one
    success-rate curve per label plus the per-stage database sizes.
    """
    experiences = list(experiences)
    curves = {label: [] for label in selectors}
    stage_info = []
    for k, env in enumerate(order[:stages]):
        batch = [e for e in experiences if e.env_category == env]
        summarizer.partial_fit(batch)
        db = summarizer.database_
        stage_info.append({"stage": k + 1, "env": env, "experiences": len(batch), "insights": len(db),
                           "seeds": len(summarizer.seeds_)})
        for label, selector in selectors.items():
            selector.fit(db)
            res = evaluate(eval_tasks, planner, selector, workers)
            curves[label].append(res["metrics"]["sr_acc"])
    drops = {label: (c[0] - c[-1]) if c else 0.0 for label, c in curves.items()}
    return {"order": list(order[:stages]), "stages": stage_info, "sr_curves": curves, "sr_drop": drops}
