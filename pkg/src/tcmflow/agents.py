"""Specialist/general agent profiles, patient-based selection, and team formation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from tcmflow import prompts
from tcmflow.gateway.base import ChatBackend, ChatExchange, chat
from tcmflow.records import ChiefComplaint

SPECIALIST = "specialist"
GENERAL = "general"


class TeamAlreadyFormed(RuntimeError):
    pass


class GeneralRoleMissing(ValueError):
    pass


@dataclass(frozen=True)
class AgentProfile:
    id: str
    name: str
    role: str
    specialty: str
    knowledge_pack: str
    core_questions: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.role not in (SPECIALIST, GENERAL):
            raise ValueError(f"role must be {SPECIALIST!r} or {GENERAL!r}")
        if self.role == GENERAL and self.specialty != "general":
            raise ValueError("general-role profiles must carry specialty='general'")
        if self.role == SPECIALIST and not self.core_questions:
            raise ValueError(f"specialist {self.id!r} needs core_questions")


@dataclass(frozen=True)
class AgentTeam:
    """The per-patient team: selected specialists plus (normally) one general agent.

    `general` is absent only for the general-agent ablation; form_team always
    produces a complete team.
    """

    specialists: tuple[AgentProfile, ...]
    general: AgentProfile | None
    formed_for: str

    def __post_init__(self) -> None:
        if not self.specialists:
            raise ValueError("team needs at least one specialist")
        ids = [p.id for p in self.specialists]
        if len(set(ids)) != len(ids):
            raise ValueError("specialists must be distinct")
        if self.general is not None and self.general.role != GENERAL:
            raise GeneralRoleMissing(f"agent {self.general.id!r} does not carry the general role")

    def members(self) -> tuple[AgentProfile, ...]:
        if self.general is None:
            return self.specialists
        return self.specialists + (self.general,)

    def core_question_pool(self) -> list[str]:
        pool: list[str] = []
        for profile in self.specialists:
            pool.extend(profile.core_questions)
        return pool

    def digest(self) -> str:
        return "|".join(p.id for p in self.members()) + "@" + self.formed_for


@dataclass(frozen=True)
class SelectionResult:
    profiles: tuple[AgentProfile, ...]
    justification: str
    fallback: bool = False


def load_registry(path: str | Path) -> list[AgentProfile]:
    """Load agent profiles from a JSONL file; knowledge packs may live in side files."""
    base = Path(path).parent
    profiles = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        pack = data.get("knowledge_pack", "")
        if "knowledge_pack_file" in data:
            pack = (base / data["knowledge_pack_file"]).read_text(encoding="utf-8")
        profiles.append(AgentProfile(
            id=data["id"],
            name=data.get("name", data["id"]),
            role=data["role"],
            specialty=data["specialty"],
            knowledge_pack=pack,
            core_questions=tuple(data.get("core_questions", [])),
        ))
    return profiles


def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


def select_specialists(
    complaint: ChiefComplaint,
    registry: list[AgentProfile],
    gateway: ChatBackend,
    max_specialists: int = 2,
    default_specialty: str = "internal medicine",
) -> SelectionResult:
    """Ask the manager prompt to pick specialists for this complaint.

    Specialty names in the response are matched against the registry; when
    nothing matches, the configured default specialist is used and the result
    carries the fallback flag.
    """
    specialists = [p for p in registry if p.role == SPECIALIST]
    if not specialists:
        raise ValueError("registry has no specialists")
    system, user = prompts.select_specialists_prompt(
        complaint.text, [p.specialty for p in specialists]
    )
    exchange = chat(ChatExchange(system=system, user=user), gateway)
    answer = exchange.response or ""
    by_specialty = {_normalize(p.specialty): p for p in specialists}
    picked: list[AgentProfile] = []
    for fragment in answer.replace("\n", ",").split(","):
        profile = by_specialty.get(_normalize(fragment))
        if profile is not None and profile not in picked:
            picked.append(profile)
    if not picked:
        fallback = by_specialty.get(_normalize(default_specialty), specialists[0])
        return SelectionResult(profiles=(fallback,), justification=answer, fallback=True)
    return SelectionResult(profiles=tuple(picked[:max_specialists]), justification=answer)


def form_team(
    selected: list[AgentProfile] | tuple[AgentProfile, ...],
    general: AgentProfile,
    complaint: ChiefComplaint,
) -> AgentTeam:
    if not selected:
        raise ValueError("no specialists selected")
    if general.role != GENERAL:
        raise GeneralRoleMissing(f"agent {general.id!r} does not carry the general role")
    return AgentTeam(specialists=tuple(selected), general=general, formed_for=complaint.digest())


@dataclass
class TeamSlot:
    """Per-session guard: the team is established exactly once per consultation."""

    team: AgentTeam | None = field(default=None)

    def form(self, selected, general: AgentProfile, complaint: ChiefComplaint) -> AgentTeam:
        if self.team is not None:
            raise TeamAlreadyFormed("the team for this session is already established")
        self.team = form_team(selected, general, complaint)
        return self.team
