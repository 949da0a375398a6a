"""Dense leg: cosine ranking of prescription entries against the record text."""

from __future__ import annotations

from tcmflow.gateway.base import EmbeddingBackend, cosine, embed
from tcmflow.knowledge import PrescriptionEntry


class EmbedderFailure(RuntimeError):
    pass


def entry_embedding_text(entry: PrescriptionEntry) -> str:
    """The text an entry is embedded as: syndrome type joined with its manifestations."""
    return f"{entry.syndrome_type} {entry.clinical_manifestations}"


def dense_search(
    query: str,
    candidates: list[PrescriptionEntry],
    embedder: EmbeddingBackend,
    n: int,
) -> list[tuple[str, float]]:
    """Top-n (id, cosine) descending; ties by entry id ascending."""
    if not candidates:
        raise ValueError("no candidates to search")
    try:
        vectors = embed([query] + [entry_embedding_text(e) for e in candidates], embedder)
    except Exception as exc:
        raise EmbedderFailure(str(exc)) from exc
    qvec, entry_vecs = vectors[0], vectors[1:]
    hits = [(entry.id, cosine(qvec, vec)) for entry, vec in zip(candidates, entry_vecs)]
    hits.sort(key=lambda pair: (-pair[1], pair[0]))
    return hits[:n]
