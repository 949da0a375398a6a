"""Uniform access to chat and embedding backends, plus vector similarity."""

from tcmflow.gateway.base import (
    ChatBackend,
    ChatExchange,
    DimensionMismatch,
    EmbeddingBackend,
    EmbeddingVector,
    EmptyInput,
    GatewayFailure,
    NoScriptMatch,
    ReplayMismatch,
    chat,
    cosine,
    cosine_with_flag,
    embed,
)
from tcmflow.gateway.embedding import HashedBigramEmbedder
from tcmflow.gateway.http import HttpChatBackend, HttpEmbeddingBackend, TokenBucket
from tcmflow.gateway.scripted import (
    RecordingBackend,
    ScriptedChatBackend,
    ScriptEntry,
    TranscriptReplayBackend,
    load_scripted_spec,
    load_transcript,
    save_transcript,
)

__all__ = [
    "ChatBackend",
    "ChatExchange",
    "DimensionMismatch",
    "EmbeddingBackend",
    "EmbeddingVector",
    "EmptyInput",
    "GatewayFailure",
    "HashedBigramEmbedder",
    "HttpChatBackend",
    "HttpEmbeddingBackend",
    "NoScriptMatch",
    "RecordingBackend",
    "ReplayMismatch",
    "ScriptEntry",
    "ScriptedChatBackend",
    "TokenBucket",
    "TranscriptReplayBackend",
    "chat",
    "cosine",
    "cosine_with_flag",
    "embed",
    "load_scripted_spec",
    "load_transcript",
    "save_transcript",
]
