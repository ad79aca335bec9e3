"""Text embedding backends and cosine similarity."""
from __future__ import annotations

import functools
import hashlib
import os
import re
import threading
import time

import numpy as np

from .core import InsightMemError


class EmbeddingError(InsightMemError):
    pass


class DimensionMismatch(EmbeddingError, ValueError):
    pass


class ZeroVector(EmbeddingError, ValueError):
    pass


class EmbeddingTransportError(EmbeddingError):
    """Remote embedding call failed; safe to retry."""

    retryable = True


_TOKEN = re.compile(r"[a-z0-9]+")


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _freeze(vec: np.ndarray) -> np.ndarray:
    vec.setflags(write=False)
    return vec


@functools.lru_cache(maxsize=65536)
def _token_hash(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


class LocalHashEmbedder:
    """Deterministic hashed bag-of-words embedder (no network).

    Tokens are lowercase alphanumeric runs; each token adds 1.0 to the
    bucket chosen by its BLAKE2 digest; the result is L2-normalized.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim

    @property
    def fingerprint(self) -> str:
        return f"local-hash-{self.dim}"

    def _bucket(self, token: str) -> int:
        return _token_hash(token) % self.dim

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmbeddingError("cannot embed empty text")
        tokens = _TOKEN.findall(text.lower()) or text.split()
        vec = np.zeros(self.dim)
        for tok in tokens:
            vec[self._bucket(tok)] += 1.0
        return _freeze(vec / np.linalg.norm(vec))


class RateLimiter:
    """Spaces calls at least ``1/rate`` seconds apart."""

    def __init__(self, rate: float | None, clock=time.monotonic, sleep=time.sleep):
        self.interval = 1.0 / rate if rate else 0.0
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self):
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            if now < self._next:
                self._sleep(self._next - now)
                now = self._next
            self._next = now + self.interval


class RemoteEmbedder:
    """Embeddings from an HTTP service speaking ``{model, input}`` -> ``{data: [{embedding}]}``."""

    def __init__(self, base_url: str, model: str, api_key_env: str = "OPENAI_API_KEY",
                 requests_per_second: float | None = None, timeout: float = 30.0, transport=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self._limiter = RateLimiter(requests_per_second)
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._dim = None

    @property
    def fingerprint(self) -> str:
        return f"remote-{self.base_url}-{self.model}"

    def embed(self, text: str) -> np.ndarray:
        import httpx

        if not text or not text.strip():
            raise EmbeddingError("cannot embed empty text")
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._limiter.wait()
        try:
            resp = self._client.post(f"{self.base_url}/embeddings",
                                     json={"model": self.model, "input": [text]}, headers=headers)
        except httpx.HTTPError as exc:
            raise EmbeddingTransportError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise EmbeddingTransportError(f"embedding service returned HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise EmbeddingError(f"embedding service returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            values = resp.json()["data"][0]["embedding"]
            vec = np.asarray(values, dtype=float)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise EmbeddingError(f"malformed embedding response: {exc}") from exc
        if vec.ndim != 1 or not np.all(np.isfinite(vec)):
            raise EmbeddingError("embedding contains non-finite values")
        if self._dim is None:
            self._dim = vec.shape[0]
        elif vec.shape[0] != self._dim:
            raise DimensionMismatch(f"service changed dimension {self._dim} -> {vec.shape[0]}")
        return _freeze(vec)
