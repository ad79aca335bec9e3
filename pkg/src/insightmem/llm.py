"""Chat-completion access: remote HTTP backend, scripted mock, record/replay cache."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

from .core import InsightMemError, atomic_write_text
from .embedder import RateLimiter

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")


class LLMError(InsightMemError):
    pass


class TransportError(LLMError):
    pass


class LLMTimeout(TransportError):
    pass


class RateLimited(TransportError):
    pass


class MalformedResponse(LLMError):
    pass


class NoScript(LLMError):
    pass


class CacheMiss(LLMError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self):
        msgs = tuple(m if isinstance(m, ChatMessage) else ChatMessage(**m) for m in self.messages)
        object.__setattr__(self, "messages", msgs)
        if not any(m.role == "user" for m in msgs):
            raise ValueError("chat request needs at least one user message")
        for m in msgs:
            if m.role not in ROLES:
                raise ValueError(f"unknown role {m.role!r}")
            if not m.content or not m.content.strip():
                raise ValueError("message content must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    @classmethod
    def user(cls, prompt: str, model: str, **kw) -> "ChatRequest":
        return cls(model, (ChatMessage("user", prompt),), **kw)

    @property
    def prompt(self) -> str:
        return "\n\n".join(m.content for m in self.messages)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
        }


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str = "stop"
    usage: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"content": self.content, "finish_reason": self.finish_reason, "usage": self.usage}

    @classmethod
    def from_dict(cls, d: dict) -> "ChatResponse":
        return cls(d["content"], d.get("finish_reason", "stop"), d.get("usage"))


def _normalize(text: str) -> str:
    return " ".join(text.split())


def request_digest(req: ChatRequest) -> str:
    """SHA-256 over the request with whitespace-only differences removed."""
    payload = req.to_dict()
    payload["messages"] = [{"role": m["role"], "content": _normalize(m["content"])} for m in payload["messages"]]
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


Predicate = Union[str, Callable[[str], bool]]
Responder = Union[str, Callable[[ChatRequest], str]]


@dataclass
class ScriptedLLM:
    """Deterministic mock: ordered (predicate, responder) rules, first match wins.

    A string predicate matches when it occurs in the prompt text; a string
    responder is returned verbatim, a callable one receives the request.
    """

    rules: list = field(default_factory=list)
    calls: int = 0

    def add_rule(self, predicate: Predicate, responder: Responder) -> "ScriptedLLM":
        self.rules.append((predicate, responder))
        return self

    def complete(self, req: ChatRequest) -> ChatResponse:
        self.calls += 1
        prompt = req.prompt
        for predicate, responder in self.rules:
            hit = predicate in prompt if isinstance(predicate, str) else predicate(prompt)
            if hit:
                text = responder if isinstance(responder, str) else responder(req)
                return ChatResponse(text, "stop", None)
        raise NoScript(f"no scripted rule matches prompt digest {request_digest(req)[:16]}")


class RemoteChatLLM:
    """HTTP chat-completion client with exponential backoff.

    Retries 429, 5xx, timeouts and transport failures: ``max_attempts`` tries,
    sleeping ``base_delay * factor**k`` between them.
    """

    def __init__(self, base_url: str, api_key_env: str = "OPENAI_API_KEY", timeout: float = 60.0,
                 max_attempts: int = 5, base_delay: float = 1.0, factor: float = 2.0,
                 requests_per_second: Optional[float] = None, transport=None, sleep=time.sleep):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.factor = factor
        self._sleep = sleep
        self._limiter = RateLimiter(requests_per_second, sleep=sleep)
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self.attempts = 0

    def _headers(self) -> dict:
        key = os.environ.get(self.api_key_env)
        return {"Authorization": f"Bearer {key}"} if key else {}

    def complete(self, req: ChatRequest) -> ChatResponse:
        import httpx

        body = {
            "model": req.model,
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        last: Exception = TransportError("no attempt made")
        for attempt in range(self.max_attempts):
            if attempt:
                delay = self.base_delay * self.factor ** (attempt - 1)
                log.info("retrying chat completion in %.1fs (attempt %d/%d): %s",
                         delay, attempt + 1, self.max_attempts, last)
                self._sleep(delay)
            self._limiter.wait()
            self.attempts += 1
            try:
                resp = self._client.post(f"{self.base_url}/chat/completions", json=body, headers=self._headers())
            except httpx.TimeoutException as exc:
                last = LLMTimeout(f"request timed out: {exc}")
                continue
            except httpx.HTTPError as exc:
                last = TransportError(f"transport failure: {exc}")
                continue
            if resp.status_code == 429:
                last = RateLimited("rate limited (HTTP 429)")
                continue
            if resp.status_code >= 500:
                last = TransportError(f"server error HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise LLMError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return self._parse(resp)
        raise last

    @staticmethod
    def _parse(resp) -> ChatResponse:
        try:
            data = resp.json()
            choice = data["choices"][0]
            content = choice["message"]["content"]
            finish = choice.get("finish_reason") or "stop"
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected chat response shape: {exc}") from exc
        if content is None and finish == "stop":
            raise MalformedResponse("completion finished normally without content")
        return ChatResponse(content or "", finish, data.get("usage"))


class ReplayCache:
    """Caching wrapper: one JSON file per request digest.

    ``mode="record"`` serves hits and records misses through ``inner``;
    ``mode="replay"`` never calls ``inner`` and raises CacheMiss instead.
    """

    def __init__(self, inner, cache_dir, mode: str = "record"):
        if mode not in ("record", "replay"):
            raise ValueError(f"unknown cache mode {mode!r}")
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.mode = mode
        self.hits = 0
        self.misses = 0

    def path_for(self, req: ChatRequest) -> Path:
        return self.cache_dir / f"{request_digest(req)}.json"

    def complete(self, req: ChatRequest) -> ChatResponse:
        path = self.path_for(req)
        if path.exists():
            self.hits += 1
            return ChatResponse.from_dict(json.loads(path.read_text(encoding="utf-8"))["response"])
        self.misses += 1
        if self.mode == "replay":
            raise CacheMiss(f"no cached response for request {path.stem[:16]}")
        resp = self.inner.complete(req)
        entry = {"request": req.to_dict(), "response": resp.to_dict()}
        atomic_write_text(path, json.dumps(entry, indent=2, sort_keys=True) + "\n")
        return resp


def complete_text(llm, prompt: str, model: str, temperature: float = 0.0, max_output_tokens: int = 1024) -> str:
    return llm.complete(ChatRequest.user(prompt, model, temperature=temperature,
                                         max_output_tokens=max_output_tokens)).content
