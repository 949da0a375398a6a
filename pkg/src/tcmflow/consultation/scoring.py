"""Candidate-question scoring: inquiry-category coverage plus case pertinence.

A question's coverage score is its best similarity against the ten canonical
inquiry texts; its pertinence score is the best similarity against the team's
specialty key issues and the current record sections. Both maxima start from
zero and only strictly greater similarities replace them, so a question matching
nothing scores 0.0, never negative.
"""

from __future__ import annotations

from dataclasses import dataclass

from tcmflow.gateway.base import EmbeddingBackend, EmbeddingVector, cosine, embed
from tcmflow.knowledge import TqsConfig
from tcmflow.records import MedicalRecord, Question


class EmptyQuestionList(ValueError):
    pass


@dataclass(frozen=True)
class ScoredQuestion:
    question: Question
    com_score: float
    per_score: float
    total_score: float

    def __post_init__(self) -> None:
        if self.total_score != self.com_score + self.per_score:
            raise ValueError("total_score must equal com_score + per_score exactly")


def _best(qvec: EmbeddingVector, item_vecs: list[EmbeddingVector]) -> float:
    best = 0.0
    for ivec in item_vecs:
        score = cosine(qvec, ivec)
        if score > best:
            best = score
    return best


def score_questions(
    questions: list[Question],
    tqs: TqsConfig,
    core_questions: list[str],
    record: MedicalRecord,
    embedder: EmbeddingBackend,
) -> list[ScoredQuestion]:
    if not questions:
        raise EmptyQuestionList("no questions to score")
    coverage_items = tqs.canonical_texts()
    pertinence_items = list(core_questions) + record.section_texts()
    qvecs = embed([q.text for q in questions], embedder)
    cov_vecs = embed(coverage_items, embedder)
    per_vecs = embed(pertinence_items, embedder) if pertinence_items else []
    scored = []
    for question, qvec in zip(questions, qvecs):
        com = _best(qvec, cov_vecs)
        per = _best(qvec, per_vecs)
        scored.append(ScoredQuestion(
            question=question, com_score=com, per_score=per, total_score=com + per,
        ))
    return scored
