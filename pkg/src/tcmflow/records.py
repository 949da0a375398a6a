"""Core consultation value types: complaints, turns, dialogue state, medical records."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

QUESTION_KINDS = ("specialist", "general")


@dataclass(frozen=True)
class ChiefComplaint:
    """The patient's opening statement; seeds specialist selection."""

    text: str
    submitted_at: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("chief complaint text must be non-empty")

    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ConsultationTurn:
    index: int
    question: str
    answer: str

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("turn index must be >= 0")
        if not self.question.strip():
            raise ValueError("turn question must be non-empty")


@dataclass(frozen=True)
class ConsultationState:
    """The dialogue so far: chief complaint plus the ordered question/answer turns.

    Value semantics: appending turns builds a new state, never mutates one.
    """

    chief_complaint: ChiefComplaint
    turns: tuple[ConsultationTurn, ...] = ()

    def __post_init__(self) -> None:
        for pos, turn in enumerate(self.turns):
            if turn.index != pos:
                raise ValueError(f"turn indices must be contiguous from 0; got {turn.index} at {pos}")

    def with_turns(self, question_answer_pairs: list[tuple[str, str]]) -> "ConsultationState":
        base = len(self.turns)
        new = tuple(
            ConsultationTurn(index=base + i, question=q, answer=a)
            for i, (q, a) in enumerate(question_answer_pairs)
        )
        return ConsultationState(chief_complaint=self.chief_complaint, turns=self.turns + new)


@dataclass(frozen=True)
class Question:
    """A candidate consultation question with the proposing agent's rationale."""

    text: str
    rationale: str
    source: str
    kind: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("question text must be non-empty")
        if self.kind not in QUESTION_KINDS:
            raise ValueError(f"kind must be one of {QUESTION_KINDS}")


@dataclass(frozen=True)
class MedicalRecord:
    """Structured summary of the patient's condition after a given round.

    `sections` is keyed by inquiry-category names; callers building records from
    model output must filter keys against the configured categories first
    (summarize_record does).
    """

    sections: dict[str, str] = field(default_factory=dict)
    raw_summary: str = ""
    round: int = 0
    finalized: bool = False

    def section_texts(self) -> list[str]:
        return [v for v in self.sections.values() if v.strip()]

    def full_text(self) -> str:
        parts = [self.raw_summary] if self.raw_summary.strip() else []
        parts += [f"{k}: {v}" for k, v in sorted(self.sections.items()) if v.strip()]
        return "\n".join(parts)

    def finalize(self) -> "MedicalRecord":
        return MedicalRecord(sections=dict(self.sections), raw_summary=self.raw_summary,
                             round=self.round, finalized=True)

    def to_dict(self) -> dict:
        return {
            "sections": dict(sorted(self.sections.items())),
            "raw_summary": self.raw_summary,
            "round": self.round,
            "finalized": self.finalized,
        }

    @staticmethod
    def from_dict(data: dict) -> "MedicalRecord":
        return MedicalRecord(sections=dict(data.get("sections", {})),
                             raw_summary=data.get("raw_summary", ""),
                             round=int(data.get("round", 0)),
                             finalized=bool(data.get("finalized", False)))
