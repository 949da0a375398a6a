"""Deterministic scripted chat backend, plus transcript recording and replay."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from tcmflow.gateway.base import NoScriptMatch, ReplayMismatch
from tcmflow.gateway.embedding import HashedBigramEmbedder


@dataclass(frozen=True)
class ScriptEntry:
    matcher: str
    response: str
    regex: bool = False

    def matches(self, text: str) -> bool:
        if self.regex:
            return re.search(self.matcher, text) is not None
        return self.matcher in text


class ScriptedChatBackend:
    """First-match-wins response table keyed on prompt content.

    Referentially transparent: the same (system, user) pair always yields the
    same response, which makes whole sessions reproducible byte for byte.
    """

    backend_id = "scripted"

    def __init__(self, entries: list[ScriptEntry], default: str | None = None):
        if not entries and default is None:
            raise ValueError("need at least one entry or a default response")
        self.entries = list(entries)
        self.default = default

    def complete(self, system: str, user: str) -> str:
        text = system + "\n" + user
        for entry in self.entries:
            if entry.matches(text):
                return entry.response
        if self.default is not None:
            return self.default
        raise NoScriptMatch(f"no script entry matched; user prompt was: {user[:200]!r}")


@dataclass
class RecordingBackend:
    """Wraps a chat backend and records every completed call in order."""

    inner: object
    transcript: list[dict] = field(default_factory=list)

    @property
    def backend_id(self) -> str:
        return self.inner.backend_id  # type: ignore[attr-defined]

    def complete(self, system: str, user: str) -> str:
        response = self.inner.complete(system, user)  # type: ignore[attr-defined]
        self.transcript.append({"system": system, "user": user, "response": response})
        return response


class TranscriptReplayBackend:
    """Replays a recorded transcript strictly in order, verifying each prompt."""

    backend_id = "replay"

    def __init__(self, transcript: list[dict]):
        self._transcript = list(transcript)
        self._pos = 0

    def complete(self, system: str, user: str) -> str:
        if self._pos >= len(self._transcript):
            raise ReplayMismatch("transcript exhausted")
        rec = self._transcript[self._pos]
        if rec["system"] != system or rec["user"] != user:
            raise ReplayMismatch(f"call {self._pos} prompts diverge from recording")
        self._pos += 1
        return rec["response"]

    @property
    def exhausted(self) -> bool:
        return self._pos == len(self._transcript)


def load_scripted_spec(path: str | Path) -> tuple[ScriptedChatBackend, HashedBigramEmbedder]:
    """Build the scripted chat backend and its embedder from a spec file.

    Format: {"entries": [{"match": str, "response": str, "regex"?: bool}],
             "default"?: str, "embedding_mode"?: "hashed-bigram", "embedding_dim"?: int}
    """
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = [
        ScriptEntry(matcher=e["match"], response=e["response"], regex=bool(e.get("regex", False)))
        for e in raw.get("entries", [])
    ]
    backend = ScriptedChatBackend(entries, default=raw.get("default"))
    mode = raw.get("embedding_mode", "hashed-bigram")
    if mode != "hashed-bigram":
        raise ValueError(f"unsupported embedding_mode {mode!r}")
    embedder = HashedBigramEmbedder(dim=int(raw.get("embedding_dim", 256)))
    return backend, embedder


def save_transcript(transcript: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in transcript:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def load_transcript(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records
