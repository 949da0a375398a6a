"""Shared fixtures: embedder, inquiry config, registry, scripted-backend helpers."""

from __future__ import annotations

import pytest

from tcmflow.agents import AgentProfile
from tcmflow.config import default_registry
from tcmflow.gateway.embedding import HashedBigramEmbedder
from tcmflow.gateway.scripted import ScriptedChatBackend, ScriptEntry
from tcmflow.knowledge import tqs_items
from tcmflow.records import ChiefComplaint, ConsultationState, MedicalRecord, Question


@pytest.fixture(scope="session")
def embedder():
    return HashedBigramEmbedder()


@pytest.fixture(scope="session")
def tqs():
    return tqs_items()


@pytest.fixture()
def registry():
    return default_registry()


def scripted(pairs: list[tuple[str, str]], default: str | None = None,
             regex: bool = False) -> ScriptedChatBackend:
    entries = [ScriptEntry(matcher=m, response=r, regex=regex) for m, r in pairs]
    return ScriptedChatBackend(entries, default=default)


def make_question(text: str, kind: str = "specialist", source: str = "internal",
                  rationale: str = "because") -> Question:
    return Question(text=text, rationale=rationale, source=source, kind=kind)


def make_complaint(text: str = "insomnia for two weeks") -> ChiefComplaint:
    return ChiefComplaint(text=text, submitted_at="2024-01-01T00:00:00Z")


def make_state(*qa: tuple[str, str], complaint: str = "insomnia for two weeks") -> ConsultationState:
    return ConsultationState(chief_complaint=make_complaint(complaint)).with_turns(list(qa))


def make_record(sections: dict[str, str] | None = None, summary: str = "summary",
                round_no: int = 0, finalized: bool = False) -> MedicalRecord:
    return MedicalRecord(sections=sections or {}, raw_summary=summary,
                         round=round_no, finalized=finalized)


def make_specialist(profile_id: str = "internal", specialty: str = "internal medicine",
                    core: tuple[str, ...] = ("Ask about sleep and appetite.",)) -> AgentProfile:
    return AgentProfile(id=profile_id, name=f"Dr. {profile_id}", role="specialist",
                        specialty=specialty, knowledge_pack="pack", core_questions=core)


def make_general(profile_id: str = "general") -> AgentProfile:
    return AgentProfile(id=profile_id, name="Dr. general", role="general",
                        specialty="general", knowledge_pack="fundamentals")
