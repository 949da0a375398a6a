"""HTTP backend for OpenAI-compatible chat-completion and embedding providers."""

from __future__ import annotations

import os
import threading
import time
from typing import Callable, Sequence

import httpx
import numpy as np

from tcmflow.gateway.base import GatewayFailure

ENV_BASE_URL = "TCMFLOW_HTTP_BASE_URL"
ENV_API_KEY = "TCMFLOW_HTTP_API_KEY"
ENV_CHAT_MODEL = "TCMFLOW_HTTP_CHAT_MODEL"
ENV_EMBED_MODEL = "TCMFLOW_HTTP_EMBED_MODEL"


class TokenBucket:
    """Simple thread-safe rate limiter: `rate` tokens per second, burst `capacity`."""

    def __init__(self, rate: float, capacity: float | None = None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate = rate
        self.capacity = capacity if capacity is not None else rate
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


class _RetryingClient:
    """Bounded-retry POST with exponential backoff shared by both HTTP backends."""

    def __init__(self, base_url: str, api_key: str | None, timeout: float,
                 max_attempts: int, backoff: float,
                 bucket: TokenBucket | None,
                 sleep: Callable[[float], None],
                 transport: httpx.BaseTransport | None):
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(base_url=base_url, headers=headers,
                                    timeout=timeout, transport=transport)
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.bucket = bucket
        self.sleep = sleep

    def post_json(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if self.bucket is not None:
                self.bucket.acquire()
            try:
                resp = self._client.post(path, json=payload)
                if resp.status_code >= 500:
                    last_error = GatewayFailure(f"HTTP {resp.status_code} from {path}")
                elif resp.status_code >= 400:
                    raise GatewayFailure(f"HTTP {resp.status_code} from {path}: {resp.text[:200]}")
                else:
                    return resp.json()
            except httpx.TimeoutException as exc:
                last_error = exc
            except httpx.TransportError as exc:
                last_error = exc
            if attempt < self.max_attempts - 1:
                self.sleep(self.backoff * (2**attempt))
        raise GatewayFailure(f"request to {path} failed after {self.max_attempts} attempts") from last_error


def _from_env(value: str | None, env: str, fallback: str | None = None) -> str | None:
    return value if value is not None else os.environ.get(env, fallback)


class HttpChatBackend:
    backend_id = "http"

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 model: str | None = None, timeout: float = 30.0,
                 max_attempts: int = 3, backoff: float = 0.25,
                 rate_limit: float | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 transport: httpx.BaseTransport | None = None):
        base = _from_env(base_url, ENV_BASE_URL)
        if not base:
            raise GatewayFailure(f"no provider base URL; set {ENV_BASE_URL} or pass base_url")
        self.model = _from_env(model, ENV_CHAT_MODEL, "default") or "default"
        bucket = TokenBucket(rate_limit) if rate_limit else None
        self._client = _RetryingClient(base, _from_env(api_key, ENV_API_KEY), timeout,
                                       max_attempts, backoff, bucket, sleep, transport)

    def complete(self, system: str, user: str) -> str:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        data = self._client.post_json("/chat/completions", payload)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayFailure(f"malformed provider response: {data!r}") from exc


class HttpEmbeddingBackend:
    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 model: str | None = None, dim: int = 256, timeout: float = 30.0,
                 max_attempts: int = 3, backoff: float = 0.25,
                 rate_limit: float | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 transport: httpx.BaseTransport | None = None):
        base = _from_env(base_url, ENV_BASE_URL)
        if not base:
            raise GatewayFailure(f"no provider base URL; set {ENV_BASE_URL} or pass base_url")
        self.model = _from_env(model, ENV_EMBED_MODEL, "default-embed") or "default-embed"
        self.dim = dim
        bucket = TokenBucket(rate_limit) if rate_limit else None
        self._client = _RetryingClient(base, _from_env(api_key, ENV_API_KEY), timeout,
                                       max_attempts, backoff, bucket, sleep, transport)

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        data = self._client.post_json("/embeddings", {"model": self.model, "input": list(texts)})
        try:
            rows = [np.asarray(item["embedding"], dtype=np.float64) for item in data["data"]]
        except (KeyError, TypeError) as exc:
            raise GatewayFailure(f"malformed provider response: {data!r}") from exc
        out = []
        for vec in rows:
            if vec.shape != (self.dim,):
                raise GatewayFailure(f"provider returned dim {vec.shape}, expected ({self.dim},)")
            norm = float(np.sqrt(np.dot(vec, vec)))
            out.append(vec / norm if norm > 0.0 else vec)
        return out
