"""Command-line entry point: ``insightmem <command> [options]``.

Commands: ingest, summarize, select, eval, shift, db.

Exit codes: 0 ok, 2 usage, 3 configuration, 4 backend, 5 data.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from collections import Counter
from pathlib import Path

from .config import ConfigError, RunConfig
from .core import (SCALE_ORDER, ExperienceStore, InsightDatabase, InsightMemError, SnapshotError,
                   atomic_write_text)
from .embedder import EmbeddingTransportError, LocalHashEmbedder, RemoteEmbedder
from .estimators import InsightSelector, InsightSummarizer
from .experience_select import EmptyFailureSet
from .insight_select import render_insight_block
from .llm import LLMError, RemoteChatLLM, ReplayCache
from .metrics import EmptyRecordSet, dumps_report, metrics_table
from .pipeline import SHIFT_ORDER, domain_shift, evaluate, ingest
from .toyworld.planners import make_planner
from .toyworld.scripts import toy_mock_llm
from .toyworld.tasks import ENVIRONMENTS, SPLITS, generate_tasks

log = logging.getLogger("insightmem")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_BACKEND, EXIT_DATA = 0, 2, 3, 4, 5
SHIFT_STRATEGIES = {"msi": "hashmap", "general_only": "general_only", "flat": "flat"}


class UsageError(Exception):
    pass


# -- wiring -------------------------------------------------------------

def build_llm(cfg: RunConfig):
    b = cfg.backend
    if b.kind == "mock":
        inner = toy_mock_llm()
    else:
        inner = RemoteChatLLM(b.base_url, b.api_key_env, timeout=b.timeout, max_attempts=b.max_attempts,
                              requests_per_second=b.requests_per_second)
    if b.cache_mode == "off":
        return inner
    return ReplayCache(inner, cfg.paths.cache_dir, b.cache_mode)


def build_embedder(cfg: RunConfig):
    e = cfg.embedder
    if e.kind == "local":
        return LocalHashEmbedder(e.dim)
    return RemoteEmbedder(e.base_url or cfg.backend.base_url, e.model, cfg.backend.api_key_env,
                          requests_per_second=cfg.backend.requests_per_second)


def build_selector(cfg: RunConfig, strategy: str, llm=None) -> InsightSelector:
    return InsightSelector(strategy, llm=llm if llm is not None else build_llm(cfg),
                           embedder=build_embedder(cfg), budget_tokens=cfg.selection.budget_tokens,
                           model=cfg.backend.selection_model)


def build_planner(cfg: RunConfig, kind: str, llm=None):
    return make_planner(kind, seed=cfg.seed, llm=llm, model=cfg.backend.planning_model)


def tasks_for(cfg: RunConfig, split: str):
    if split not in SPLITS:
        raise UsageError(f"unknown split {split!r} (choose from {', '.join(SPLITS)})")
    return generate_tasks(cfg.seed, cfg.toyworld.counts(), n_layouts=cfg.toyworld.layouts)[split]


def load_snapshot(cfg: RunConfig) -> InsightDatabase:
    path = cfg.paths.snapshot
    if not path.exists():
        raise SnapshotError(f"no insight snapshot at {path}; run 'summarize' first")
    return InsightDatabase.load(path)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_report(cfg: RunConfig, name: str, report: dict) -> Path:
    path = cfg.paths.report_dir / name
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, dumps_report(report))
    return path


# -- commands -------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, args, out) -> int:
    tasks = tasks_for(cfg, args.split)
    llm = build_llm(cfg) if cfg.toyworld.ingest_planner == "llm" else None
    planner = build_planner(cfg, cfg.toyworld.ingest_planner, llm)
    path = cfg.paths.experiences
    path.parent.mkdir(parents=True, exist_ok=True)
    path.touch()
    store = ExperienceStore(path, ENVIRONMENTS)
    clash = [t.id for t in tasks if t.id in store]
    if clash:
        raise InsightMemError(f"{len(clash)} {args.split} experiences already in the store (e.g. {clash[0]}); "
                              "the store is append-only, use a fresh path")
    results = ingest(tasks, planner, store, cfg.toyworld.workers)
    wins = sum(exp.success for exp, _ in results)
    print(f"ingested {len(results)} {args.split} experiences ({wins} successful); store now holds {len(store)}",
          file=out)
    return EXIT_OK


def summary_table(db: InsightDatabase) -> str:
    lines = ["scale        insights"]
    for kind in SCALE_ORDER:
        lines.append(f"{kind:<12} {len(db.by_scale(kind))}")
    lines.append(f"{'total':<12} {len(db)}")
    hist = Counter(i.score for i in db.ordered())
    lines.append("")
    lines.append("score  count")
    lines += [f"{score:<6} {hist[score]}" for score in sorted(hist)]
    return "\n".join(lines)


def cmd_summarize(cfg: RunConfig, args, out) -> int:
    path = cfg.paths.experiences
    if not path.exists():
        raise InsightMemError(f"no experience store at {path}; run 'ingest' first")
    store = ExperienceStore(path, ENVIRONMENTS)
    if len(store) == 0:
        log.warning("experience store is empty; writing an empty frozen snapshot")
    summarizer = InsightSummarizer(llm=build_llm(cfg), mode=args.mode, embedder=build_embedder(cfg),
                                   model=cfg.backend.generation_model, environments=ENVIRONMENTS)
    try:
        summarizer.fit(store)
    except EmptyFailureSet as exc:
        raise EmptyFailureSet(f"pair mode needs at least one failed experience: {exc}") from exc
    db = summarizer.database_
    cfg.paths.snapshot.parent.mkdir(parents=True, exist_ok=True)
    db.save(cfg.paths.snapshot)
    failed = len(summarizer.report_.failed)
    print(f"{len(summarizer.seeds_)} seeds ({args.mode} mode), {summarizer.report_.applied_count} operations "
          f"applied, {failed} seeds failed", file=out)
    print(summary_table(db), file=out)
    print(f"snapshot sha256 {sha256_text(db.dumps())}", file=out)
    return EXIT_OK


def cmd_select(cfg: RunConfig, args, out) -> int:
    db = load_snapshot(cfg)
    strategy = args.strategy or cfg.selection.strategy
    sel = build_selector(cfg, strategy).fit(db).select(args.query, args.env)
    if args.json:
        out.write(dumps_report(sel.to_dict()))
        return EXIT_OK
    print(f"strategy: {sel.strategy}", file=out)
    print(f"subtask names: {', '.join(sel.subtask_names) if sel.subtask_names else '(none)'}", file=out)
    print(f"subtask token cost: {sel.token_cost}", file=out)
    for d in sel.diagnostics:
        print(f"diagnostic: {d}", file=out)
    block = render_insight_block(sel)
    if block:
        print(block, file=out)
    return EXIT_OK


def eval_report(cfg: RunConfig, split: str, strategy: str, db: InsightDatabase) -> dict:
    tasks = tasks_for(cfg, split)
    if not tasks:
        raise EmptyRecordSet(f"split {split!r} has no tasks to evaluate")
    llm = build_llm(cfg)
    selector = None if strategy == "none" else build_selector(cfg, strategy, llm).fit(db)
    planner = build_planner(cfg, cfg.toyworld.planner, llm if cfg.toyworld.planner == "llm" else None)
    res = evaluate(tasks, planner, selector, cfg.toyworld.workers)
    return {
        "command": "eval",
        "split": split,
        "strategy": strategy,
        "seed": cfg.seed,
        "planner": cfg.toyworld.planner,
        "snapshot_sha256": sha256_text(db.dumps()),
        "n_tasks": len(tasks),
        "metrics": res["metrics"],
        "episodes": res["episodes"],
    }


def cmd_eval(cfg: RunConfig, args, out) -> int:
    db = load_snapshot(cfg)
    if not db.frozen:
        raise InsightMemError("evaluation needs a frozen snapshot")
    strategy = args.strategy or cfg.selection.strategy
    report = eval_report(cfg, args.split, strategy, db)
    path = write_report(cfg, f"eval-{args.split}-{strategy}.json", report)
    print(metrics_table({f"{strategy} / {args.split}": report["metrics"]}), file=out)
    print(f"report: {path.name} sha256 {sha256_text(dumps_report(report))}", file=out)
    return EXIT_OK


def cmd_shift(cfg: RunConfig, args, out) -> int:
    if not 1 <= args.stages <= len(SHIFT_ORDER):
        raise UsageError(f"--stages must be between 1 and {len(SHIFT_ORDER)}")
    path = cfg.paths.experiences
    if not path.exists():
        raise InsightMemError(f"no experience store at {path}; run 'ingest' first")
    experiences = [e for e in ExperienceStore(path, ENVIRONMENTS) if e.id.startswith("train-")]
    missing = [env for env in SHIFT_ORDER[:args.stages] if not any(e.env_category == env for e in experiences)]
    if missing:
        raise InsightMemError(f"no training experiences for environment(s): {', '.join(missing)}")
    eval_tasks = [t for t in tasks_for(cfg, "valid_unseen") if t.env_category == SHIFT_ORDER[0]]
    if not eval_tasks:
        raise EmptyRecordSet("no kitchen tasks in valid_unseen")
    llm = build_llm(cfg)
    summarizer = InsightSummarizer(llm=llm, mode=args.mode, embedder=build_embedder(cfg),
                                   model=cfg.backend.generation_model, environments=ENVIRONMENTS)
    selectors = {label: build_selector(cfg, strat, llm) for label, strat in SHIFT_STRATEGIES.items()}
    planner = build_planner(cfg, cfg.toyworld.planner, llm if cfg.toyworld.planner == "llm" else None)
    res = domain_shift(experiences, eval_tasks, planner, summarizer, selectors, stages=args.stages,
                       workers=cfg.toyworld.workers)
    report = {"command": "shift", "seed": cfg.seed, "mode": args.mode, "eval_tasks": len(eval_tasks), **res}
    path = write_report(cfg, "shift.json", report)
    header = "stage  env          " + "  ".join(f"{k:>12}" for k in res["sr_curves"])
    print(header, file=out)
    for i, st in enumerate(res["stages"]):
        cells = "  ".join(f"{res['sr_curves'][k][i] * 100:>12.2f}" for k in res["sr_curves"])
        print(f"{st['stage']:<6} {st['env']:<12} {cells}", file=out)
    drops = "  ".join(f"{k} {v * 100:.2f}" for k, v in res["sr_drop"].items())
    print(f"SR drop (stage 1 -> {args.stages}): {drops}", file=out)
    print(f"report: {path.name}", file=out)
    return EXIT_OK


def db_listing(db: InsightDatabase) -> str:
    lines = [f"frozen: {str(db.frozen).lower()}  insights: {len(db)}"]
    current = None
    for n, ins in db.display_numbers():
        label = ins.scale.kind if ins.scale.name is None else f"{ins.scale.kind}: {ins.scale.name}"
        if label != current:
            lines.append(f"[{label}]")
            current = label
        lines.append(f"  {n:>3}. (id {ins.id}, score {ins.score}) {ins.text}")
    return "\n".join(lines)


def cmd_db(cfg: RunConfig, args, out) -> int:
    if args.action == "import":
        db = InsightDatabase.load(args.path)
        cfg.paths.snapshot.parent.mkdir(parents=True, exist_ok=True)
        db.save(cfg.paths.snapshot)
        print(f"imported {len(db)} insights", file=out)
        return EXIT_OK
    db = load_snapshot(cfg)
    if args.action == "inspect":
        print(db_listing(db), file=out)
    else:
        if args.path is None or args.path == "-":
            out.write(db.dumps())
        else:
            db.save(args.path)
            print(f"exported {len(db)} insights", file=out)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("configuration overrides")
    g.add_argument("--config", type=Path, help="TOML run configuration")
    g.add_argument("--seed", type=int)
    g.add_argument("--backend", choices=("mock", "remote"))
    g.add_argument("--cache-mode", choices=("off", "record", "replay"))
    g.add_argument("--base-url")
    g.add_argument("--embedder", choices=("local", "remote"))
    g.add_argument("--budget-tokens", type=int)
    g.add_argument("--experiences", type=Path)
    g.add_argument("--snapshot", type=Path)
    g.add_argument("--cache-dir", type=Path)
    g.add_argument("--report-dir", type=Path)
    g.add_argument("--planner", choices=("obedient", "naive", "explorer", "llm"))
    g.add_argument("--workers", type=int)
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="insightmem", description="Multi-scale insight memory pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="run toy-world episodes and append experiences")
    p.add_argument("--split", default="train")
    _common(p)

    p = sub.add_parser("summarize", help="learn a frozen insight snapshot from stored experiences")
    p.add_argument("--mode", choices=("pair", "success"), default="pair")
    _common(p)

    p = sub.add_parser("select", help="preview insight selection for one query")
    p.add_argument("query")
    p.add_argument("--env", help="environment category of the query")
    p.add_argument("--strategy", choices=("hashmap", "vector", "general_only", "flat", "none"))
    p.add_argument("--json", action="store_true")
    _common(p)

    p = sub.add_parser("eval", help="evaluate a split with insights injected")
    p.add_argument("--split", default="valid_unseen")
    p.add_argument("--strategy", choices=("hashmap", "vector", "general_only", "flat", "none"))
    _common(p)

    p = sub.add_parser("shift", help="domain-shift robustness run (kitchen, living room, bedroom)")
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--mode", choices=("pair", "success"), default="pair")
    _common(p)

    p = sub.add_parser("db", help="inspect, export or import an insight snapshot")
    p.add_argument("action", choices=("inspect", "export", "import"))
    p.add_argument("path", nargs="?", help="file for export/import ('-' or omitted exports to stdout)")
    _common(p)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.override("backend", kind=args.backend, cache_mode=args.cache_mode, base_url=args.base_url)
    cfg.override("embedder", kind=args.embedder)
    cfg.override("selection", budget_tokens=args.budget_tokens)
    cfg.override("paths", experiences=args.experiences, snapshot=args.snapshot, cache_dir=args.cache_dir,
                 report_dir=args.report_dir)
    cfg.override("toyworld", planner=args.planner, workers=args.workers)
    return cfg


COMMANDS = {"ingest": cmd_ingest, "summarize": cmd_summarize, "select": cmd_select, "eval": cmd_eval,
            "shift": cmd_shift, "db": cmd_db}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "db" and args.action == "import" and not args.path:
        print("insightmem db import: a snapshot path is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LLMError, EmbeddingTransportError) as exc:
        print(f"backend error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (InsightMemError, ValueError, OSError) as exc:
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
