"""Run configuration: a TOML file plus command-line overrides.

API keys never live in the file; ``backend.api_key_env`` names the
environment variable that holds them.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from .core import InsightMemError
from .insight_select import DEFAULT_BUDGET, STRATEGIES
from .toyworld.planners import PLANNERS
from .toyworld.tasks import DEFAULT_COUNTS, SPLITS


class ConfigError(InsightMemError):
    """Bad or unresolvable configuration."""


@dataclass
class BackendConfig:
    kind: str = "mock"  # mock | remote
    cache_mode: str = "off"  # off | record | replay
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    # one model for every phase unless overridden per phase
    generation_model: str = "gpt-4"
    selection_model: str = "gpt-4"
    planning_model: str = "gpt-4"
    requests_per_second: Optional[float] = None
    timeout: float = 60.0
    max_attempts: int = 5


@dataclass
class EmbedderConfig:
    kind: str = "local"  # local | remote
    dim: int = 256
    model: str = "text-embedding-ada-002"
    base_url: Optional[str] = None


@dataclass
class SelectionConfig:
    strategy: str = "hashmap"
    budget_tokens: int = DEFAULT_BUDGET


@dataclass
class PathsConfig:
    experiences: Path = Path("runs/experiences.jsonl")
    snapshot: Path = Path("runs/insights.json")
    cache_dir: Path = Path("runs/cache")
    report_dir: Path = Path("runs/reports")


@dataclass
class ToyworldConfig:
    train: int = DEFAULT_COUNTS["train"]
    valid_seen: int = DEFAULT_COUNTS["valid_seen"]
    valid_unseen: int = DEFAULT_COUNTS["valid_unseen"]
    layouts: int = 10
    planner: str = "obedient"
    ingest_planner: str = "explorer"
    workers: int = 1

    def counts(self) -> dict:
        return {s: getattr(self, s) for s in SPLITS}


_SECTIONS = {
    "backend": BackendConfig,
    "embedder": EmbedderConfig,
    "selection": SelectionConfig,
    "paths": PathsConfig,
    "toyworld": ToyworldConfig,
}
_FORBIDDEN = {"api_key", "key", "token", "secret", "password"}


@dataclass
class RunConfig:
    seed: int = 0
    backend: BackendConfig = field(default_factory=BackendConfig)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    toyworld: ToyworldConfig = field(default_factory=ToyworldConfig)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> "RunConfig":
        cfg = cls()
        for key, value in data.items():
            if key == "seed":
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ConfigError("seed must be an integer")
                cfg.seed = value
                continue
            if key not in _SECTIONS:
                raise ConfigError(f"unknown config section [{key}]")
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            section = getattr(cfg, key)
            names = {f.name for f in dataclasses.fields(section)}
            for name, v in value.items():
                if name.lower() in _FORBIDDEN:
                    raise ConfigError(f"[{key}].{name}: secrets are read from the environment, not the config file")
                if name not in names:
                    raise ConfigError(f"unknown key [{key}].{name}")
                setattr(section, name, v)
        if base_dir is not None:
            for f in dataclasses.fields(cfg.paths):
                p = Path(getattr(cfg.paths, f.name))
                setattr(cfg.paths, f.name, p if p.is_absolute() else base_dir / p)
        cfg.paths = PathsConfig(**{f.name: Path(getattr(cfg.paths, f.name)) for f in dataclasses.fields(cfg.paths)})
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        """Read a TOML file; relative paths inside it resolve against its directory."""
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data, base_dir=path.parent)

    def override(self, section: str, **values) -> "RunConfig":
        """Apply command-line overrides; None means 'not given'."""
        target = getattr(self, section) if section else self
        for k, v in values.items():
            if v is not None:
                setattr(target, k, Path(v) if section == "paths" else v)
        return self.validate()

    def validate(self) -> "RunConfig":
        b, e, s, t = self.backend, self.embedder, self.selection, self.toyworld
        if b.kind not in ("mock", "remote"):
            raise ConfigError(f"backend.kind must be mock or remote, got {b.kind!r}")
        if b.cache_mode not in ("off", "record", "replay"):
            raise ConfigError(f"backend.cache_mode must be off, record or replay, got {b.cache_mode!r}")
        if b.requests_per_second is not None and b.requests_per_second <= 0:
            raise ConfigError("backend.requests_per_second must be positive")
        if e.kind not in ("local", "remote"):
            raise ConfigError(f"embedder.kind must be local or remote, got {e.kind!r}")
        if e.kind == "remote" and not (e.base_url or b.base_url):
            raise ConfigError("remote embedder needs a base_url")
        if not isinstance(e.dim, int) or e.dim <= 0:
            raise ConfigError("embedder.dim must be a positive integer")
        if s.strategy not in STRATEGIES:
            raise ConfigError(f"selection.strategy must be one of {', '.join(STRATEGIES)}, got {s.strategy!r}")
        if not isinstance(s.budget_tokens, int) or s.budget_tokens < 1:
            raise ConfigError("selection.budget_tokens must be a positive integer")
        for name in ("planner", "ingest_planner"):
            if getattr(t, name) not in PLANNERS:
                raise ConfigError(f"toyworld.{name} must be one of {', '.join(PLANNERS)}")
        for split in SPLITS:
            n = getattr(t, split)
            if not isinstance(n, int) or n < 0:
                raise ConfigError(f"toyworld.{split} must be a non-negative integer")
        if not isinstance(t.workers, int) or t.workers < 1:
            raise ConfigError("toyworld.workers must be at least 1")
        return self

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["paths"] = {k: str(v) for k, v in out["paths"].items()}
        return out
