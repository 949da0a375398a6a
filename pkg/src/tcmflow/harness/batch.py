"""Batch simulated consultations with per-case isolation."""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from tcmflow.consultation.engine import ConsultationEngine, ConsultationResult, run_consultation
from tcmflow.gateway.base import ChatBackend
from tcmflow.harness.patient import SimulatedPatient
from tcmflow.knowledge import CaseRecord
from tcmflow.records import ChiefComplaint

BATCH_TIMESTAMP = "1970-01-01T00:00:00Z"

_SENTENCE_SPLIT = re.compile(r"[。；;.!?！？\n]")


def complaint_from_case(case: CaseRecord) -> ChiefComplaint:
    """The case narrative's first sentence, with a fixed timestamp for reproducibility."""
    for sentence in _SENTENCE_SPLIT.split(case.narrative):
        if sentence.strip():
            return ChiefComplaint(text=sentence.strip(), submitted_at=BATCH_TIMESTAMP)
    return ChiefComplaint(text=case.narrative.strip(), submitted_at=BATCH_TIMESTAMP)


def run_simulated_consultation(
    case: CaseRecord,
    engine: ConsultationEngine,
    patient_gateway: ChatBackend | None = None,
) -> ConsultationResult:
    patient = SimulatedPatient(case=case, gateway=patient_gateway or engine.gateway)
    return run_consultation(
        complaint_from_case(case),
        engine.registry,
        engine.config,
        patient,
        engine.gateway,
        engine.embedder,
        engine.tqs,
        include_general_agent=engine.include_general_agent,
    )


@dataclass(frozen=True)
class CaseOutcome:
    case_id: str
    aborted: bool
    error: str | None
    rounds: int
    transcript: list[dict]
    record: dict | None


@dataclass(frozen=True)
class BatchReport:
    outcomes: tuple[CaseOutcome, ...]

    @property
    def successes(self) -> int:
        return sum(1 for o in self.outcomes if not o.aborted)

    @property
    def aborted(self) -> int:
        return sum(1 for o in self.outcomes if o.aborted)

    def to_json(self) -> str:
        payload = {
            "successes": self.successes,
            "aborted": self.aborted,
            "cases": [
                {"case_id": o.case_id, "aborted": o.aborted, "error": o.error,
                 "rounds": o.rounds}
                for o in self.outcomes
            ],
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)


def transcript_rounds(transcript: list[dict]) -> int:
    return sum(1 for event in transcript if event.get("event") == "final_questions")


def run_batch(
    cases: list[CaseRecord],
    engine: ConsultationEngine,
    patient_gateway: ChatBackend | None = None,
    concurrency: int = 1,
) -> BatchReport:
    """Run every case; one case erroring never disturbs the others.

    Outcomes are aggregated in case order regardless of completion order.
    """

    def run_one(case: CaseRecord) -> CaseOutcome:
        try:
            result = run_simulated_consultation(case, engine, patient_gateway)
            return CaseOutcome(
                case_id=case.id,
                aborted=result.aborted,
                error=result.error,
                rounds=transcript_rounds(result.transcript),
                transcript=result.transcript,
                record=result.record.to_dict() if result.record else None,
            )
        except Exception as exc:  # noqa: BLE001 - batch isolation
            return CaseOutcome(case_id=case.id, aborted=True,
                               error=f"{type(exc).__name__}: {exc}",
                               rounds=0, transcript=[], record=None)

    if concurrency > 1 and len(cases) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            futures = [pool.submit(run_one, case) for case in cases]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [run_one(case) for case in cases]
    return BatchReport(outcomes=tuple(outcomes))
