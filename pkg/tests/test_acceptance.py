"""Numbered acceptance criteria. Each test prints a PASS/FAIL line in the terminal summary."""
import hashlib
import io
import json
import math
import random
import re
import string
from fractions import Fraction
from pathlib import Path

import pytest

from insightmem.cli import main
from insightmem.core import InsightDatabase, InsightScale
from insightmem.embedder import LocalHashEmbedder
from insightmem.experience_select import ExperiencePair, select_pairs
from insightmem.insight_gen import parse_operations, update_database
from insightmem.insight_select import select_vector
from insightmem.llm import ScriptedLLM
from insightmem.metrics import EpisodeRecord, gc_acc, gc_plw, sr_acc, sr_plw

from conftest import make_exp

FIXTURES = Path(__file__).parent / "fixtures"
acceptance = pytest.mark.acceptance


def run_cli(*argv):
    out = io.StringIO()
    return main([str(a) for a in argv], out), out.getvalue()


def write_config(root: Path) -> Path:
    path = root / "run.toml"
    path.write_text("[paths]\nexperiences = \"exp.jsonl\"\nsnapshot = \"insights.json\"\n"
                    "cache_dir = \"cache\"\nreport_dir = \"reports\"\n")
    return path


# -- 1. scoring lifecycle ------------------------------------------------------------

SECTIONS = ("general", "environment", "subtask")
HEADERS = {"general": "GENERAL RULES:", "environment": "ENVIRONMENT RULES:", "subtask": "TASK RULES:"}
TASK_NAMES = ("Heat Food", "Make Bed", "Wash Dishes")
WORDS = ("open", "the", "fridge", "first", "check", "drawer", "wash", "knife", "bowl", "carefully")


def random_response(rng, n_candidates):
    """Return (completion text, structured lines) for a random generation reply."""
    lines, spec = [], []
    section = None
    if rng.random() < 0.9:
        section = rng.choice(SECTIONS)
        lines.append(HEADERS[section])
    for _ in range(rng.randint(0, 12)):
        r = rng.random()
        if r < 0.15:
            section = rng.choice(SECTIONS)
            lines.append(HEADERS[section])
            continue
        if r < 0.2:
            lines.append("I think these rules look reasonable.")
            continue
        kind = rng.choice(("ADD", "ADD", "AGREE", "REMOVE", "EDIT", "MOVE"))
        number = rng.randint(1, n_candidates + 2)
        text = " ".join(rng.choice(WORDS) for _ in range(rng.randint(2, 6)))
        name = None
        if kind in ("AGREE", "REMOVE") and rng.random() < 0.5:
            text = None
        body = text or ""
        if section == "subtask" and kind in ("ADD", "EDIT", "MOVE") and rng.random() < 0.85:
            name = rng.choice(TASK_NAMES)
            body += f" (TASK: {name})"
        lines.append(f"{kind} {number}: {body}".rstrip())
        spec.append((section, kind, number, text, name))
    return "\n".join(lines), spec


class NaiveMemory:
    """Independent replay interpreter for the rule lifecycle."""

    def __init__(self):
        self.rows = {}  # id -> [kind, name, text, score]
        self.next_id = 1
        self.seen = dict.fromkeys(("limit", "duplicate", "dangling", "deleted", "moved"), 0)

    def candidates(self, env):
        ids = sorted(self.rows)
        ordered = [i for i in ids if self.rows[i][0] == "general"]
        if env is not None:
            ordered += [i for i in ids if self.rows[i][0] == "environment" and self.rows[i][1] == env]
        ordered += [i for i in ids if self.rows[i][0] == "subtask"]
        return {n: i for n, i in enumerate(ordered, 1)}

    def _new(self, section, name, env, text):
        scale_name = env if section == "environment" else name if section == "subtask" else None
        self.rows[self.next_id] = [section, scale_name, text, 2]
        self.next_id += 1

    def update(self, spec, env):
        numbers = self.candidates(env)
        accepted, per_section, targeted = [], dict.fromkeys(SECTIONS, 0), set()
        for section, kind, number, text, name in spec:
            if section is None:
                continue
            if section == "subtask" and kind in ("ADD", "EDIT", "MOVE") and name is None:
                continue
            if per_section[section] >= 4:
                self.seen["limit"] += 1
                continue
            if kind != "ADD":
                if number in targeted:
                    self.seen["duplicate"] += 1
                    continue
                targeted.add(number)
            per_section[section] += 1
            accepted.append((section, kind, number, text, name))
        accepted.sort(key=lambda op: SECTIONS.index(op[0]))
        for section, kind, number, text, name in accepted:
            if kind == "ADD":
                if section == "environment" and env is None:
                    continue
                self._new(section, name, env, text)
                continue
            target = numbers.get(number)
            if target is None or target not in self.rows:
                self.seen["dangling"] += 1
                continue
            if kind == "AGREE":
                self.rows[target][3] += 1
            elif kind == "EDIT":
                self.rows[target][2] = text
            elif kind == "REMOVE":
                self.rows[target][3] -= 1
                if self.rows[target][3] == 0:
                    self.seen["deleted"] += 1
                    del self.rows[target]
            elif kind == "MOVE":
                if section == "environment" and env is None:
                    continue
                self.seen["moved"] += 1
                del self.rows[target]
                self._new(section, name, env, text)

    def snapshot(self):
        return sorted((i, *row) for i, row in self.rows.items())


def db_rows(db):
    return sorted((i.id, i.scale.kind, i.scale.name, i.text, i.score) for i in db.ordered())


@acceptance(1, "scoring lifecycle matches a naive replay interpreter")
def test_scoring_lifecycle(stopwatch):
    rng = random.Random(20241015)
    coverage = dict.fromkeys(("limit", "duplicate", "dangling", "deleted", "moved"), 0)
    for seq in range(500):
        db, model = InsightDatabase(), NaiveMemory()
        for _ in range(rng.randint(1, 5)):
            env = rng.choice(("kitchen", "bedroom", None))
            seed = ExperiencePair(make_exp("s", env=env), make_exp("f", success=False, env=env), 1.0)
            text, spec = random_response(rng, len(model.candidates(env)))
            update_database(db, seed, "pair", ScriptedLLM().add_rule("EXISTING RULES", text))
            model.update(spec, env)
            assert db_rows(db) == model.snapshot(), (seq, text)
            assert all(i.score >= 1 for i in db.ordered())
        assert db.next_id == model.next_id
        for k, v in model.seen.items():
            coverage[k] += v
    assert all(v > 0 for v in coverage.values()), coverage
    assert stopwatch() < 5


# -- 2. pairing oracle --------------------------------------------------------------------

PAIR_WORDS = ("put", "apple", "mug", "in", "sink", "fridge", "slice", "bread", "heat", "soup", "on", "plate")


def bucket_counts(text, dim=256):
    counts = [0] * dim
    for tok in re.findall(r"[a-z0-9]+", text.lower()):
        h = int.from_bytes(hashlib.blake2b(tok.encode(), digest_size=8).digest(), "big") % dim
        counts[h] += 1
    return counts


def exact_cosine_key(a, b):
    """Monotone in the cosine, computed exactly: sign(dot) * dot^2 / (|a|^2 |b|^2)."""
    dot = sum(x * y for x, y in zip(a, b))
    norm = sum(x * x for x in a) * sum(y * y for y in b)
    return Fraction(dot * abs(dot), norm)


def exhaustive_pairs(successes, failures):
    out = []
    for s in successes:
        sv = bucket_counts(s.user_query)
        keys = [(exact_cosine_key(sv, bucket_counts(f.user_query)), f.id) for f in failures]
        best = max(k for k, _ in keys)
        out.append((s.id, min(fid for k, fid in keys if k == best)))  # ties: lowest id as a string
    return out


@acceptance(2, "pair selection equals exhaustive argmax with lowest-id tie-break")
def test_pairing_oracle(stopwatch):
    rng = random.Random(99)
    emb = LocalHashEmbedder()
    ties = 0
    for _ in range(50):
        def query():
            return " ".join(rng.choice(PAIR_WORDS) for _ in range(rng.randint(1, 5)))
        succ = [make_exp(f"s{i}", query=query()) for i in range(rng.randint(1, 8))]
        fail_queries = [query() for _ in range(rng.randint(1, 15))]
        fail_queries += rng.sample(fail_queries, min(3, len(fail_queries)))  # force exact ties
        ids = rng.sample(range(100), len(fail_queries))
        fails = [make_exp(f"f{i}", query=q, success=False) for i, q in zip(ids, fail_queries)]
        rng.shuffle(fails)
        got = [(p.success.id, p.failure.id) for p in select_pairs(succ, fails, emb)]
        assert got == exhaustive_pairs(succ, fails)
        ties += len(fails) - len({f.user_query for f in fails})
    assert ties > 0
    assert stopwatch() < 5


# -- 3. metrics oracle ----------------------------------------------------------------------

def brute_force_metrics(rows):
    n = len(rows)
    total_ref = sum(r[3] for r in rows)
    sr = sum(1 for scn, gcn, _, _ in rows if scn == gcn) / n
    gc = sum(r[0] for r in rows) / sum(r[1] for r in rows)
    srp = sum((1 if scn == gcn else 0) * lref * lref / max(lpred, lref) for scn, gcn, lpred, lref in rows)
    gcp = sum((scn / gcn) * lref * lref / max(lpred, lref) for scn, gcn, lpred, lref in rows)
    return sr, srp / total_ref, gc, gcp / total_ref


@acceptance(3, "metrics match a brute-force evaluator and the hand fixtures")
def test_metrics_oracle(stopwatch):
    rng = random.Random(5)
    for _ in range(1000):
        rows = []
        for _ in range(rng.randint(1, 20)):
            gcn = rng.randint(1, 6)
            scn = gcn if rng.random() < 0.4 else rng.randint(0, gcn)
            rows.append((scn, gcn, rng.randint(0, 60), rng.randint(1, 30)))
        records = [EpisodeRecord(*r) for r in rows]
        got = (sr_acc(records), sr_plw(records), gc_acc(records), gc_plw(records))
        for g, want in zip(got, brute_force_metrics(rows)):
            assert abs(g - want) <= 1e-9
    assert gc_plw([EpisodeRecord(2, 4, 20, 10)]) == 0.25
    assert sr_plw([EpisodeRecord(3, 3, 20, 10)]) == 0.5
    assert stopwatch() < 5


# -- 4. parser robustness -----------------------------------------------------------------

FRAGMENTS = ("GENERAL RULES:", "ENVIRONMENT RULES:", "TASK RULES:", "ADD", "REMOVE", "EDIT", "AGREE", "MOVE",
             "ADD 3:", "EDIT 0:", "AGREE 99999999999999999999:", "(TASK:", ")", "(TASK: Heat Food)", ":",
             "**", "- ", "1. ", "#", "\n", "\r\n", "\t", "é", "​", "rule", "12", "-4", "  ")


def fuzz_input(rng):
    if rng.random() < 0.1:
        return "".join(chr(rng.randint(0, 0x2FFF)) for _ in range(rng.randint(0, 80)))
    parts = []
    for _ in range(rng.randint(0, 30)):
        if rng.random() < 0.7:
            parts.append(rng.choice(FRAGMENTS))
        else:
            parts.append("".join(rng.choice(string.printable) for _ in range(rng.randint(1, 8))))
        if rng.random() < 0.3:
            parts.append(" ")
    return "".join(parts)


@acceptance(4, "parser corpus behaves as specified and 10,000 fuzzed inputs never raise")
def test_parser_robustness(stopwatch):
    corpus = json.loads((FIXTURES / "parser_corpus.json").read_text())
    assert len(corpus) >= 30
    for case in corpus:
        res = parse_operations("\n".join(case["lines"]))
        got = [[op.kind, op.section, op.rule_number, op.subtask_name] for op in res.operations]
        assert got == case["ops"], case["name"]
        reasons = [r for _, r in res.dropped]
        assert len(reasons) == len(case["dropped"]), case["name"]
        for want, have in zip(case["dropped"], reasons):
            assert want in have, case["name"]
        assert len(res.diagnostics) == case["diagnostics"], case["name"]
    rng = random.Random(404)
    for _ in range(10_000):
        res = parse_operations(fuzz_input(rng))
        per_section = {}
        for op in res.operations:
            per_section[op.section] = per_section.get(op.section, 0) + 1
        assert all(n <= 4 for n in per_section.values())
        targets = [op.rule_number for op in res.operations if op.kind != "ADD"]
        assert len(targets) == len(set(targets))
    assert stopwatch() < 30


# -- 5. end-to-end determinism -------------------------------------------------------------

def sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@acceptance(5, "ingest, summarize, eval give byte-identical artifacts across 3 runs")
def test_end_to_end_determinism(tmp_path, stopwatch):
    hashes = set()
    for k in range(3):
        root = tmp_path / f"run{k}"
        root.mkdir()
        cfg = write_config(root)
        for argv in (("ingest",), ("summarize", "--mode", "pair"), ("eval", "--strategy", "hashmap")):
            code, text = run_cli(*argv, "--config", cfg)
            assert code == 0, text
        hashes.add((sha(root / "exp.jsonl"), sha(root / "insights.json"),
                    sha(root / "reports" / "eval-valid_unseen-hashmap.json")))
    assert len(hashes) == 1
    assert stopwatch() < 60


# -- 6. insight efficacy --------------------------------------------------------------------

@acceptance(6, "hashmap selection beats no insights by 0.25 and flat injection by 0.10")
def test_insight_efficacy(tmp_path, stopwatch):
    cfg = write_config(tmp_path)
    assert run_cli("ingest", "--config", cfg)[0] == 0
    assert run_cli("summarize", "--config", cfg)[0] == 0
    sr = {}
    for strategy in ("hashmap", "flat", "none"):
        code, text = run_cli("eval", "--config", cfg, "--strategy", strategy, "--planner", "obedient")
        assert code == 0, text
        report = json.loads((tmp_path / "reports" / f"eval-valid_unseen-{strategy}.json").read_text())
        assert report["n_tasks"] >= 40
        sr[strategy] = report["metrics"]["sr_acc"]
    assert sr["hashmap"] - sr["none"] >= 0.25, sr
    assert sr["hashmap"] - sr["flat"] >= 0.10, sr
    assert stopwatch() < 120


# -- 7. domain shift ------------------------------------------------------------------------

@acceptance(7, "domain shift: MSI kitchen SR drop is zero and no worse than flat")
def test_domain_shift_shape(tmp_path, stopwatch):
    cfg = write_config(tmp_path)
    assert run_cli("ingest", "--config", cfg)[0] == 0
    code, text = run_cli("shift", "--config", cfg, "--stages", "3")
    assert code == 0, text
    report = json.loads((tmp_path / "reports" / "shift.json").read_text())
    assert report["order"] == ["kitchen", "living_room", "bedroom"]
    drop = report["sr_drop"]
    assert drop["msi"] <= drop["flat"]
    assert drop["msi"] == 0
    assert stopwatch() < 120


# -- 8. budget invariant ---------------------------------------------------------------------

LONG_WORDS = ("refrigerator", "countertop", "microwave", "dishwasher", "café-au-lait", "naïveté", "日本の台所")


def random_db(rng):
    db = InsightDatabase()
    db.add(InsightScale.general(), "go to the right room first")
    for i in range(rng.randint(0, 40)):
        n = rng.choice((1, 4, 16, 60, 200, 400))  # words, roughly 3 tokens each
        text = " ".join(rng.choice(LONG_WORDS) for _ in range(n))
        db.add(InsightScale.subtask(rng.choice(TASK_NAMES)), text)
    return db.freeze()


@acceptance(8, "vector selection stays within 2000 tokens and grows with the budget")
def test_budget_invariant(stopwatch):
    rng = random.Random(8)
    emb = LocalHashEmbedder()
    for _ in range(200):
        db = random_db(rng)
        query = " ".join(rng.choice(PAIR_WORDS) for _ in range(4))
        sel = select_vector(db, query, emb, 2000)
        counted = sum(math.ceil(len(i.text.encode("utf-8")) / 4) for i in sel.subtask)
        assert counted == sel.token_cost <= 2000
        low, high = sorted(rng.randint(1, 6000) for _ in range(2))
        small = {i.id for i in select_vector(db, query, emb, low).subtask}
        large = {i.id for i in select_vector(db, query, emb, high).subtask}
        assert small <= large
    assert stopwatch() < 5


# -- 9. recorded selection fixture -----------------------------------------------------------

@acceptance(9, "replayed hashmap selection reproduces the recorded subtask names")
def test_replay_fixture(stopwatch):
    code, text = run_cli("select", "put two soapbar in garbagecan",
                         "--config", FIXTURES / "select_replay" / "run.toml")
    assert code == 0, text
    names = [ln for ln in text.splitlines() if ln.startswith("subtask names: ")]
    assert names == ["subtask names: Object Placement, Distinguishing Similarities, Sequential Placement, "
                     "Revealing Hidden Objects, Comprehensive Search"]
    stopwatch()
