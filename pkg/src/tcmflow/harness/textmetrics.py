"""Lexical and semantic similarity metrics for consultation transcripts."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from tcmflow.gateway.base import EmbeddingBackend, cosine, embed
from tcmflow.retrieval.tokenize import tokenize


class EmptyReference(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


def bleu1(candidate: str, reference: str) -> float:
    """Clipped unigram precision times the brevity penalty exp(1 - r/c) for c < r."""
    ref_tokens = tokenize(reference)
    if not ref_tokens:
        raise EmptyReference("reference has no tokens")
    cand_tokens = tokenize(candidate)
    if not cand_tokens:
        return 0.0
    ref_counts = Counter(ref_tokens)
    cand_counts = Counter(cand_tokens)
    clipped = sum(min(count, ref_counts[tok]) for tok, count in cand_counts.items())
    precision = clipped / len(cand_tokens)
    c, r = len(cand_tokens), len(ref_tokens)
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return precision * brevity


@dataclass(frozen=True)
class SimilarityReport:
    mean: float
    std: float
    min: float
    max: float
    bleu1: float

    def __post_init__(self) -> None:
        if not (self.min <= self.mean <= self.max):
            raise ValueError("mean must lie between min and max")

    def to_dict(self) -> dict:
        return {"mean_sim": self.mean, "std": self.std, "min": self.min,
                "max": self.max, "bleu1": self.bleu1}


def similarity_stats(
    transcripts: Sequence[str],
    references: Sequence[str],
    embedder: EmbeddingBackend,
) -> SimilarityReport:
    """Per-pair cosine of embedded full texts; population (divide-by-N) std."""
    if len(transcripts) != len(references):
        raise LengthMismatch(f"{len(transcripts)} transcripts vs {len(references)} references")
    if not transcripts:
        raise LengthMismatch("need at least one pair")
    sims = []
    for cand, ref in zip(transcripts, references):
        cv, rv = embed([cand, ref], embedder)
        sims.append(cosine(cv, rv))
    n = len(sims)
    mean = sum(sims) / n
    variance = sum((s - mean) ** 2 for s in sims) / n
    bleu_mean = sum(bleu1(c, r) for c, r in zip(transcripts, references)) / n
    return SimilarityReport(mean=mean, std=math.sqrt(variance),
                            min=min(sims), max=max(sims), bleu1=bleu_mean)
