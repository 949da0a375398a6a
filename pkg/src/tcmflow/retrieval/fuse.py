"""Reciprocal rank fusion of ranked id lists."""

from __future__ import annotations

from typing import Sequence


class MalformedRanking(ValueError):
    pass


def rrf_fuse(lists: Sequence[Sequence[str]], k: float = 60.0) -> list[tuple[str, float]]:
    """Fuse ranked lists: score(d) = sum over lists containing d of 1/(k + rank_d).

    Ranks are 1-based positions. Every doc from any input list appears in the
    output, sorted by score descending with ties broken by id ascending.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    scores: dict[str, float] = {}
    for ranked in lists:
        seen: set[str] = set()
        for position, doc_id in enumerate(ranked, start=1):
            if doc_id in seen:
                raise MalformedRanking(f"doc {doc_id!r} appears twice in one ranking")
            seen.add(doc_id)
            scores[doc_id] = scores.get(doc_id, 0.0) + 1.0 / (k + position)
    fused = sorted(scores.items(), key=lambda pair: (-pair[1], pair[0]))
    return fused
