"""LLM-simulated patient bound to a single case narrative."""

from __future__ import annotations

from dataclasses import dataclass

from tcmflow import prompts
from tcmflow.gateway.base import ChatBackend, ChatExchange, chat
from tcmflow.knowledge import CaseRecord
from tcmflow.records import ConsultationState, Question


@dataclass
class SimulatedPatient:
    """Answers questions strictly from the case; unknown facts get the disclosure marker.

    The grounding is enforced by the prompt contract under scripted backends and
    auditable post hoc under live ones.
    """

    case: CaseRecord
    gateway: ChatBackend

    def answer(self, question: Question, state: ConsultationState) -> str:
        system, user = prompts.patient_prompt(self.case.narrative, question.text)
        exchange = chat(ChatExchange(system=system, user=user), self.gateway)
        return exchange.response or prompts.NO_INFORMATION_MARKER


def simulate_patient_answer(patient: SimulatedPatient, question: Question) -> str:
    if not question.text.strip():
        raise ValueError("question must be non-empty")
    return patient.answer(question, ConsultationState(
        chief_complaint=_case_complaint(patient.case),
    ))


def _case_complaint(case: CaseRecord):
    from tcmflow.harness.batch import complaint_from_case

    return complaint_from_case(case)
