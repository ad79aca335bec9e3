"""Domain types shared across the pipeline, plus persistence.

Experiences are stored as newline-delimited JSON (one episode per line).
The insight database is saved as a single versioned JSON document.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

SNAPSHOT_VERSION = 1
DEFAULT_ENVIRONMENTS = ("kitchen", "living_room", "bedroom", "bathroom")
INITIAL_SCORE = 2
TASK_NAME_MAX = 40
TASK_NAME_SOFT_MAX = 20

GENERAL = "general"
ENVIRONMENT = "environment"
SUBTASK = "subtask"
SCALE_ORDER = (GENERAL, ENVIRONMENT, SUBTASK)


class InsightMemError(Exception):
    """Base class for all package errors."""


class InvariantError(InsightMemError, ValueError):
    pass


class FrozenDatabaseError(InsightMemError):
    pass


class UnknownInsightError(InsightMemError, KeyError):
    pass


class DuplicateExperienceError(InsightMemError):
    pass


class SnapshotError(InsightMemError):
    """A snapshot could not be loaded. ``record`` is the offending insight index, if any."""

    def __init__(self, message: str, record: Optional[int] = None):
        self.record = record
        if record is not None:
            message = f"insight record {record}: {message}"
        super().__init__(message)


def normalize_task_name(raw: str) -> tuple[str, Optional[str]]:
    """Trim and collapse whitespace, cap at 40 chars.

    Returns ``(name, warning)``; warning is set when the name exceeds the
    20-character soft limit the generation prompt asks for.
    """
    name = " ".join(raw.split())
    warning = None
    if len(name) > TASK_NAME_SOFT_MAX:
        warning = f"task name {name!r} longer than {TASK_NAME_SOFT_MAX} characters"
        name = name[:TASK_NAME_MAX].rstrip()
    return name, warning


def _name_key(name: str) -> str:
    return " ".join(name.split()).casefold()


@dataclass(frozen=True)
class OutcomeRecord:
    scn: int
    gcn: int
    step_count: int
    success: bool

    def __post_init__(self):
        if self.scn < 0:
            raise InvariantError("scn must be non-negative")
        if self.gcn < 1:
            raise InvariantError("gcn must be positive")
        if self.scn > self.gcn:
            raise InvariantError(f"scn ({self.scn}) exceeds gcn ({self.gcn})")
        # zero steps is legal: an empty plan still produces an episode
        if self.step_count < 0:
            raise InvariantError("step_count must be non-negative")
        if self.success != (self.scn == self.gcn):
            raise InvariantError("success must hold exactly when scn == gcn")

    @classmethod
    def from_counts(cls, scn: int, gcn: int, step_count: int) -> "OutcomeRecord":
        return cls(scn, gcn, step_count, scn == gcn)


@dataclass(frozen=True)
class Experience:
    id: str
    task_background: str
    user_query: str
    plan: tuple[str, ...]
    feedback: tuple[str, ...]
    executed_steps: tuple[dict, ...]
    outcome: OutcomeRecord
    env_category: Optional[str] = None

    def __post_init__(self):
        # accept lists from callers, store tuples
        for name in ("plan", "feedback", "executed_steps"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.id:
            raise InvariantError("experience id must be non-empty")
        if not self.user_query or not self.user_query.strip():
            raise InvariantError(f"experience {self.id}: user_query must be non-empty")
        if len(self.executed_steps) != self.outcome.step_count:
            raise InvariantError(
                f"experience {self.id}: {len(self.executed_steps)} executed steps "
                f"but outcome.step_count={self.outcome.step_count}"
            )

    @property
    def success(self) -> bool:
        return self.outcome.success

    def validate_env(self, vocabulary: Iterable[str]) -> None:
        if self.env_category is not None and self.env_category not in set(vocabulary):
            raise InvariantError(
                f"experience {self.id}: env_category {self.env_category!r} not in vocabulary"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "env_category": self.env_category,
            "task_background": self.task_background,
            "user_query": self.user_query,
            "plan": list(self.plan),
            "feedback": list(self.feedback),
            "executed_steps": [dict(s) for s in self.executed_steps],
            "outcome": {
                "scn": self.outcome.scn,
                "gcn": self.outcome.gcn,
                "step_count": self.outcome.step_count,
                "success": self.outcome.success,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Experience":
        out = data["outcome"]
        return cls(
            id=data["id"],
            env_category=data.get("env_category"),
            task_background=data.get("task_background", ""),
            user_query=data["user_query"],
            plan=tuple(data.get("plan", ())),
            feedback=tuple(data.get("feedback", ())),
            executed_steps=tuple(data.get("executed_steps", ())),
            outcome=OutcomeRecord(out["scn"], out["gcn"], out["step_count"], out["success"]),
        )


class ExperienceStore:
    """Append-only experience store, optionally backed by a JSON-lines file.

    Query embeddings are cached per (embedder fingerprint, experience id).
    """

    def __init__(self, path=None, environments: Iterable[str] = DEFAULT_ENVIRONMENTS):
        self.path = Path(path) if path is not None else None
        self.environments = tuple(environments)
        self._items: dict[str, Experience] = {}
        self._embeddings: dict[tuple, object] = {}
        if self.path is not None and self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        exp = Experience.from_dict(json.loads(line))
                    except (KeyError, TypeError, ValueError) as exc:
                        raise InsightMemError(f"{self.path}:{lineno}: bad experience record: {exc}") from exc
                    self._insert(exp)

    def _insert(self, exp: Experience) -> None:
        exp.validate_env(self.environments)
        if exp.id in self._items:
            raise DuplicateExperienceError(f"experience {exp.id!r} already stored")
        self._items[exp.id] = exp

    def add(self, exp: Experience) -> str:
        self._insert(exp)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(exp.to_dict(), sort_keys=True) + "\n")
        return exp.id

    def get(self, exp_id: str) -> Experience:
        return self._items[exp_id]

    def list_by_outcome(self, success: bool) -> list[Experience]:
        return [e for e in self._items.values() if e.success == success]

    def query_embedding(self, exp: Experience, embedder):
        key = (embedder.fingerprint, exp.id)
        if key not in self._embeddings:
            self._embeddings[key] = embedder.embed(exp.user_query)
        return self._embeddings[key]

    def __iter__(self) -> Iterator[Experience]:
        return iter(list(self._items.values()))

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, exp_id) -> bool:
        return exp_id in self._items


@dataclass(frozen=True)
class InsightScale:
    kind: str
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in SCALE_ORDER:
            raise InvariantError(f"unknown scale kind {self.kind!r}")
        if self.kind == GENERAL:
            if self.name is not None:
                raise InvariantError("general scale takes no name")
        elif not self.name or not self.name.strip():
            raise InvariantError(f"{self.kind} scale requires a name")
        elif self.kind == SUBTASK and len(self.name) > TASK_NAME_MAX:
            raise InvariantError(f"subtask name longer than {TASK_NAME_MAX} characters")

    @classmethod
    def general(cls) -> "InsightScale":
        return cls(GENERAL)

    @classmethod
    def environment(cls, name: str) -> "InsightScale":
        return cls(ENVIRONMENT, name)

    @classmethod
    def subtask(cls, name: str) -> "InsightScale":
        return cls(SUBTASK, name)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.name is not None:
            d["name"] = self.name
        return d

    def __str__(self):
        return self.kind if self.name is None else f"{self.kind}:{self.name}"


@dataclass(frozen=True)
class Insight:
    id: int
    scale: InsightScale
    text: str
    score: int

    def to_dict(self) -> dict:
        return {"id": self.id, "scale": self.scale.to_dict(), "text": self.text, "score": self.score}


def _check_text(text: str) -> str:
    if not isinstance(text, str) or not text.strip():
        raise InvariantError("insight text must be non-empty")
    if "\n" in text or "\r" in text:
        raise InvariantError("insight text must be a single line")
    return text.strip()


@dataclass
class InsightDatabase:
    """Scale-partitioned, scored rule store.

    Insights keep stable integer ids. Display numbers are derived on demand:
    a flat 1..n numbering ordered general, environment, subtask, with
    insertion order inside each scale.
    """

    _insights: dict = field(default_factory=dict)
    frozen: bool = False
    next_id: int = 1
    environments: Optional[tuple] = None

    # -- reads ---------------------------------------------------------
    def __len__(self):
        return len(self._insights)

    def __contains__(self, insight_id):
        return insight_id in self._insights

    def get(self, insight_id: int) -> Insight:
        try:
            return self._insights[insight_id]
        except KeyError:
            raise UnknownInsightError(insight_id) from None

    def by_scale(self, kind: str, name: Optional[str] = None) -> list[Insight]:
        out = [i for i in self._insights.values() if i.scale.kind == kind]
        if name is not None:
            key = _name_key(name)
            out = [i for i in out if _name_key(i.scale.name) == key]
        return out

    def ordered(self) -> list[Insight]:
        return [i for kind in SCALE_ORDER for i in self.by_scale(kind)]

    def display_numbers(self, insights: Optional[list[Insight]] = None) -> list[tuple[int, Insight]]:
        items = self.ordered() if insights is None else insights
        return list(enumerate(items, 1))

    def subtask_names(self) -> list[str]:
        seen: dict[str, str] = {}
        for ins in self.by_scale(SUBTASK):
            seen.setdefault(_name_key(ins.scale.name), ins.scale.name)
        return list(seen.values())

    def environment_names(self) -> list[str]:
        return list(dict.fromkeys(i.scale.name for i in self.by_scale(ENVIRONMENT)))

    # -- mutations -----------------------------------------------------
    def _check_mutable(self):
        if self.frozen:
            raise FrozenDatabaseError("insight database is frozen")

    def add(self, scale: InsightScale, text: str, score: int = INITIAL_SCORE) -> Insight:
        self._check_mutable()
        if score < 1:
            raise InvariantError("new insights need a positive score")
        if scale.kind == ENVIRONMENT and self.environments is not None and scale.name not in self.environments:
            raise InvariantError(f"environment {scale.name!r} not in vocabulary")
        ins = Insight(self.next_id, scale, _check_text(text), score)
        self._insights[ins.id] = ins
        self.next_id += 1
        return ins

    def edit(self, insight_id: int, text: str) -> Insight:
        self._check_mutable()
        old = self.get(insight_id)
        new = Insight(old.id, old.scale, _check_text(text), old.score)
        self._insights[insight_id] = new
        return new

    def remove(self, insight_id: int) -> None:
        self._check_mutable()
        self.get(insight_id)
        del self._insights[insight_id]

    def rescore(self, insight_id: int, delta: int) -> Optional[Insight]:
        """Shift an insight's score; returns None when the insight is discarded."""
        self._check_mutable()
        old = self.get(insight_id)
        score = old.score + delta
        if score <= 0:
            del self._insights[insight_id]
            return None
        new = Insight(old.id, old.scale, old.text, score)
        self._insights[insight_id] = new
        return new

    def freeze(self) -> "InsightDatabase":
        self.frozen = True
        return self

    def thawed_copy(self) -> "InsightDatabase":
        """Unfrozen copy for continued training (e.g. sequential domain updates)."""
        return InsightDatabase(dict(self._insights), False, self.next_id, self.environments)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "frozen": self.frozen,
            "next_id": self.next_id,
            "insights": [i.to_dict() for i in self._insights.values()],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict, environments: Optional[Iterable[str]] = None) -> "InsightDatabase":
        if not isinstance(data, dict):
            raise SnapshotError("snapshot must be a JSON object")
        if "version" not in data:
            raise SnapshotError("snapshot has no version field")
        if data["version"] != SNAPSHOT_VERSION:
            raise SnapshotError(f"unsupported snapshot version {data['version']!r}")
        records = data.get("insights")
        if not isinstance(records, list):
            raise SnapshotError("snapshot 'insights' must be a list")
        db = cls(environments=tuple(environments) if environments is not None else None)
        max_id = 0
        for idx, rec in enumerate(records):
            try:
                iid = rec["id"]
                if not isinstance(iid, int) or isinstance(iid, bool) or iid < 1:
                    raise SnapshotError("id must be a positive integer", idx)
                if iid in db._insights:
                    raise SnapshotError(f"duplicate id {iid}", idx)
                sc = rec["scale"]
                scale = InsightScale(sc["kind"], sc.get("name"))
                score = rec["score"]
                if not isinstance(score, int) or isinstance(score, bool) or score < 1:
                    raise SnapshotError("score must be a positive integer", idx)
                text = _check_text(rec["text"])
            except SnapshotError:
                raise
            except (KeyError, TypeError, InvariantError) as exc:
                raise SnapshotError(f"malformed record ({exc})", idx) from exc
            db._insights[iid] = Insight(iid, scale, text, score)
            max_id = max(max_id, iid)
        next_id = data.get("next_id", max_id + 1)
        if not isinstance(next_id, int) or next_id <= max_id:
            raise SnapshotError(f"next_id {next_id!r} must exceed every stored id")
        db.next_id = next_id
        frozen = data.get("frozen")
        if not isinstance(frozen, bool):
            raise SnapshotError("frozen flag must be a boolean")
        db.frozen = frozen
        return db

    @classmethod
    def loads(cls, text: str, environments=None) -> "InsightDatabase":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data, environments)

    def save(self, path) -> None:
        atomic_write_text(Path(path), self.dumps())

    @classmethod
    def load(cls, path, environments=None) -> "InsightDatabase":
        return cls.loads(Path(path).read_text(encoding="utf-8"), environments)


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

