"""Gateway primitives: chat exchanges, embedding vectors, cosine similarity."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Protocol, Sequence, runtime_checkable

import numpy as np


class GatewayFailure(Exception):
    """A backend could not produce a response."""


class NoScriptMatch(GatewayFailure):
    """No scripted entry matched the prompts and no default was configured."""


class ReplayMismatch(GatewayFailure):
    """A replayed call diverged from the recorded transcript."""


class EmptyInput(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ChatExchange:
    """One chat-completion call: system + user prompts and, once run, the response."""

    system: str
    user: str
    response: str | None = None
    backend_id: str | None = None

    def __post_init__(self) -> None:
        if not self.system.strip() or not self.user.strip():
            raise ValueError("prompts must be non-empty")

    @property
    def completed(self) -> bool:
        return self.response is not None


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """Fixed-dimension real vector; normalized vectors carry unit L2 norm."""

    values: np.ndarray
    dim: int
    normalized: bool

    def __post_init__(self) -> None:
        if self.values.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {self.values.shape}")
        if self.normalized:
            norm = float(np.sqrt(np.dot(self.values, self.values)))
            if not (1.0 - 1e-6 <= norm <= 1.0 + 1e-6):
                raise ValueError(f"normalized vector has norm {norm}")


@runtime_checkable
class ChatBackend(Protocol):
    backend_id: str

    def complete(self, system: str, user: str) -> str: ...


@runtime_checkable
class EmbeddingBackend(Protocol):
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def chat(exchange: ChatExchange, backend: ChatBackend) -> ChatExchange:
    """Run one exchange against a backend and return it with the response filled."""
    response = backend.complete(exchange.system, exchange.user)
    if not response:
        raise GatewayFailure("backend returned an empty response")
    return replace(exchange, response=response, backend_id=backend.backend_id)


def embed(texts: Sequence[str], backend: EmbeddingBackend) -> list[EmbeddingVector]:
    if len(texts) == 0:
        raise EmptyInput("no texts to embed")
    vectors = backend.embed_batch(list(texts))
    out = []
    for vec in vectors:
        norm = float(np.sqrt(np.dot(vec, vec)))
        unit = abs(norm - 1.0) <= 1e-6
        out.append(EmbeddingVector(values=vec, dim=backend.dim, normalized=unit))
    return out


def cosine_with_flag(u: EmbeddingVector, v: EmbeddingVector) -> tuple[float, bool]:
    """Cosine similarity plus a degenerate flag set when either vector has zero norm."""
    if u.dim != v.dim:
        raise DimensionMismatch(f"dims {u.dim} != {v.dim}")
    nu = float(np.sqrt(np.dot(u.values, u.values)))
    nv = float(np.sqrt(np.dot(v.values, v.values)))
    if nu == 0.0 or nv == 0.0:
        return 0.0, True
    return float(np.dot(u.values, v.values) / (nu * nv)), False


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    return cosine_with_flag(u, v)[0]
