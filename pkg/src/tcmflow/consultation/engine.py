"""The per-round consultation loop: summarize, propose, merge, refine, ask."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol, Sequence

from tcmflow import prompts
from tcmflow.agents import GENERAL, AgentProfile, AgentTeam, TeamSlot, select_specialists
from tcmflow.consultation.scoring import ScoredQuestion, score_questions
from tcmflow.gateway.base import ChatBackend, ChatExchange, EmbeddingBackend, chat
from tcmflow.knowledge import TqsConfig, tqs_items
from tcmflow.parsing import extract_json
from tcmflow.records import ChiefComplaint, ConsultationState, MedicalRecord, Question

logger = logging.getLogger(__name__)


class EmptyGeneration(RuntimeError):
    pass


class BothEmpty(ValueError):
    pass


class AnswerTimeout(RuntimeError):
    pass


class SimulatorFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    max_rounds: int = 10
    max_feedback_turns: int = 3
    questions_per_agent: int = 2
    sufficiency_rule: str = "llm"
    max_specialists: int = 2
    default_specialty: str = "internal medicine"

    def __post_init__(self) -> None:
        if self.max_rounds < 1 or self.max_feedback_turns < 1:
            raise ValueError("bounds must be positive")
        if self.questions_per_agent not in (1, 2):
            raise ValueError("questions_per_agent must be 1 or 2")


@dataclass(frozen=True)
class RefinementRound:
    """One evaluate/optimize sub-iteration over the current question set."""

    sub_iteration: int
    evaluated: tuple[ScoredQuestion, ...]
    evaluation_summary: str
    modifications: tuple[tuple[str, str], ...] = ()
    optimized: tuple[Question, ...] = ()
    consensus: bool = False


class AnswerSource(Protocol):
    def answer(self, question: Question, state: ConsultationState) -> str: ...


class QueueAnswerSource:
    """Feeds pre-baked answers in order; handy for tests and batch replays."""

    def __init__(self, answers: Sequence[str], fallback: str | None = None):
        self._answers = list(answers)
        self._pos = 0
        self._fallback = fallback

    def answer(self, question: Question, state: ConsultationState) -> str:
        if self._pos < len(self._answers):
            out = self._answers[self._pos]
            self._pos += 1
            return out
        if self._fallback is not None:
            return self._fallback
        raise TimeoutError("answer queue exhausted")


def _fanout(fn: Callable, items: Sequence) -> list:
    """Run fn over items concurrently, joined in input order."""
    if len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=len(items)) as pool:
        futures = [pool.submit(fn, item) for item in items]
        return [f.result() for f in futures]


def summarize_record(state: ConsultationState, gateway: ChatBackend, tqs: TqsConfig) -> MedicalRecord:
    """Summarize the dialogue into a record; round equals the number of turns taken."""
    system, user = prompts.summarize_record_prompt(state, tqs.names())
    exchange = chat(ChatExchange(system=system, user=user), gateway)
    response = exchange.response or ""
    parsed = extract_json(response)
    allowed = set(tqs.names())
    if isinstance(parsed, dict):
        raw_sections = parsed.get("sections", {})
        sections = {
            k: v for k, v in raw_sections.items()
            if k in allowed and isinstance(v, str) and v.strip()
        } if isinstance(raw_sections, dict) else {}
        summary = parsed.get("summary", "") if isinstance(parsed.get("summary", ""), str) else ""
        if not summary:
            summary = response
    else:
        sections = {}
        summary = response
    return MedicalRecord(sections=sections, raw_summary=summary, round=len(state.turns))


def _parse_questions(response: str, agent: AgentProfile) -> list[Question]:
    parsed = extract_json(response)
    if not isinstance(parsed, list):
        return []
    questions = []
    for item in parsed:
        if not isinstance(item, dict) or not str(item.get("question", "")).strip():
            continue
        rationale = str(item.get("rationale", "")).strip()
        if not rationale:
            rationale = f"suggested by {agent.name} ({agent.specialty})"
        questions.append(Question(
            text=str(item["question"]).strip(),
            rationale=rationale,
            source=agent.id,
            kind="general" if agent.role == GENERAL else "specialist",
        ))
    return questions


def propose_questions(
    agent: AgentProfile,
    state: ConsultationState,
    gateway: ChatBackend,
    per_agent: int = 2,
) -> list[Question]:
    """One agent proposes 1..per_agent questions for the next round."""
    if agent.role == GENERAL:
        system, user = prompts.general_questions_prompt(agent, state, per_agent)
    else:
        system, user = prompts.specialist_questions_prompt(agent, state, per_agent)
    questions: list[Question] = []
    for attempt in range(2):
        exchange = chat(ChatExchange(system=system, user=user), gateway)
        questions = _parse_questions(exchange.response or "", agent)
        if questions:
            break
    if not questions:
        raise EmptyGeneration(f"agent {agent.id!r} produced no questions after retry")
    if len(questions) > per_agent:
        logger.info("clamping %d questions from agent %s to %d", len(questions), agent.id, per_agent)
        questions = questions[:per_agent]
    return questions


def merge_initial_questions(spec: list[Question], gen: list[Question]) -> list[Question]:
    """Specialists first, then general; exact-text duplicates keep the first occurrence."""
    if not spec and not gen:
        raise BothEmpty("no questions from either side")
    merged: list[Question] = []
    seen: set[str] = set()
    for question in list(spec) + list(gen):
        if question.text in seen:
            continue
        seen.add(question.text)
        merged.append(question)
    return merged


def evaluate_questions(
    questions: list[Question],
    record: MedicalRecord,
    team: AgentTeam,
    gateway: ChatBackend,
    embedder: EmbeddingBackend,
    tqs: TqsConfig,
    sub_iteration: int = 1,
) -> RefinementRound:
    """Score every question and attach the evaluation agent's free-text summary.

    The summary never feeds back into the numeric scores; those come from the
    embedding similarities alone.
    """
    scored = score_questions(questions, tqs, team.core_question_pool(), record, embedder)
    system, user = prompts.evaluate_questions_prompt(questions, record, scored)
    exchange = chat(ChatExchange(system=system, user=user), gateway)
    return RefinementRound(
        sub_iteration=sub_iteration,
        evaluated=tuple(scored),
        evaluation_summary=exchange.response or "",
    )


def optimize_questions(
    rnd: RefinementRound,
    record: MedicalRecord,
    team: AgentTeam,
    gateway: ChatBackend,
) -> RefinementRound:
    """Collect each member's modification suggestion and integrate them.

    Consensus holds when every member answers with the no-change marker, or when
    the integrated output is textually the same question set (a fixed point).
    """
    questions = [sq.question for sq in rnd.evaluated]

    def ask_member(member: AgentProfile) -> tuple[str, str]:
        system, user = prompts.modification_prompt(member, questions, record, rnd.evaluation_summary)
        exchange = chat(ChatExchange(system=system, user=user), gateway)
        return member.id, (exchange.response or "").strip()

    modifications = tuple(_fanout(ask_member, team.members()))
    if all(text == prompts.NO_CHANGE_MARKER for _, text in modifications):
        return replace(rnd, modifications=modifications, optimized=tuple(questions), consensus=True)

    system, user = prompts.optimize_questions_prompt(questions, modifications, record)
    exchange = chat(ChatExchange(system=system, user=user), gateway)
    parsed = extract_json(exchange.response or "")
    optimized: list[Question] = []
    by_text = {q.text: q for q in questions}
    if isinstance(parsed, list):
        for item in parsed:
            if not isinstance(item, dict) or not str(item.get("question", "")).strip():
                continue
            text = str(item["question"]).strip()
            original = by_text.get(text)
            if original is not None:
                optimized.append(original)
            else:
                optimized.append(Question(
                    text=text,
                    rationale=str(item.get("rationale", "")).strip() or "integrated by the optimizer",
                    source=str(item.get("source", "optimizer")),
                    kind=str(item.get("kind", "specialist")),
                ))
    if not optimized:
        optimized = questions
    consensus = {q.text for q in optimized} == {q.text for q in questions}
    return replace(rnd, modifications=modifications, optimized=tuple(optimized), consensus=consensus)


def refine_to_final(
    initial: list[Question],
    record: MedicalRecord,
    team: AgentTeam,
    gateway: ChatBackend,
    embedder: EmbeddingBackend,
    tqs: TqsConfig,
    config: SessionConfig,
) -> tuple[list[Question], list[RefinementRound]]:
    """Iterate evaluate/optimize to consensus or the turn bound, then pick the top questions."""
    if not initial:
        raise BothEmpty("refinement needs a non-empty initial set")
    current = list(initial)
    rounds: list[RefinementRound] = []
    final_scores: list[ScoredQuestion] | None = None
    for j in range(1, config.max_feedback_turns + 1):
        rnd = evaluate_questions(current, record, team, gateway, embedder, tqs, sub_iteration=j)
        rnd = optimize_questions(rnd, record, team, gateway)
        rounds.append(rnd)
        next_set = list(rnd.optimized)
        if [q.text for q in next_set] == [q.text for q in current]:
            final_scores = list(rnd.evaluated)
        else:
            final_scores = None
        current = next_set
        if rnd.consensus:
            break
    if final_scores is None:
        final_scores = score_questions(current, tqs, team.core_question_pool(), record, embedder)
    order = sorted(range(len(current)), key=lambda i: (-final_scores[i].total_score, i))
    chosen = [current[i] for i in order[: config.questions_per_agent]]
    return chosen, rounds


def conduct_round(
    final_questions: list[Question],
    state: ConsultationState,
    answer_source: AnswerSource,
) -> ConsultationState:
    """Ask each final question and append the answered turns as one atomic step."""
    answers = []
    for question in final_questions:
        try:
            answers.append(answer_source.answer(question, state))
        except TimeoutError as exc:
            raise AnswerTimeout(str(exc)) from exc
        except Exception as exc:
            raise SimulatorFailure(f"{type(exc).__name__}: {exc}") from exc
    return state.with_turns([(q.text, a) for q, a in zip(final_questions, answers)])


def parse_sufficiency_rule(rule: str) -> Callable:
    """Rules: 'llm' (model judges STOP/CONTINUE), 'fixed:N' (stop after N rounds), 'never'."""
    if rule == "llm":
        def llm_rule(round_no, state, record, gateway):
            system, user = prompts.sufficiency_prompt(state, record)
            exchange = chat(ChatExchange(system=system, user=user), gateway)
            return "STOP" in (exchange.response or "").upper()
        return llm_rule
    if rule == "never":
        return lambda round_no, state, record, gateway: False
    if rule.startswith("fixed:"):
        limit = int(rule.split(":", 1)[1])
        return lambda round_no, state, record, gateway: round_no >= limit
    raise ValueError(f"unknown sufficiency rule {rule!r}")


@dataclass
class EngineSession:
    """Mutable driver state for one consultation, stepped round by round."""

    complaint: ChiefComplaint
    config: SessionConfig
    state: ConsultationState
    team_slot: TeamSlot = field(default_factory=TeamSlot)
    transcript: list[dict] = field(default_factory=list)
    pending: tuple[Question, ...] = ()
    round_no: int = 0
    last_record: MedicalRecord | None = None
    final_record: MedicalRecord | None = None
    finished: bool = False
    aborted: bool = False
    error: str | None = None

    @property
    def team(self) -> AgentTeam | None:
        return self.team_slot.team

    def log(self, event: str, **payload) -> None:
        self.transcript.append({"event": event, **payload})


@dataclass(frozen=True)
class ConsultationResult:
    record: MedicalRecord | None
    transcript: list[dict]
    state: ConsultationState
    aborted: bool = False
    error: str | None = None


def _question_payload(questions: Sequence[Question]) -> list[dict]:
    return [
        {"text": q.text, "rationale": q.rationale, "source": q.source, "kind": q.kind}
        for q in questions
    ]


class ConsultationEngine:
    """Drives whole consultations; sessions advance one answered round at a time."""

    def __init__(
        self,
        registry: list[AgentProfile],
        config: SessionConfig,
        gateway: ChatBackend,
        embedder: EmbeddingBackend,
        tqs: TqsConfig | None = None,
        include_general_agent: bool = True,
    ):
        self.registry = registry
        self.config = config
        self.gateway = gateway
        self.embedder = embedder
        self.tqs = tqs if tqs is not None else tqs_items()
        self.include_general_agent = include_general_agent
        self._stop_rule = parse_sufficiency_rule(config.sufficiency_rule)

    def start(self, complaint: ChiefComplaint) -> EngineSession:
        session = EngineSession(
            complaint=complaint,
            config=self.config,
            state=ConsultationState(chief_complaint=complaint),
        )
        session.log("session_started", complaint=complaint.text, submitted_at=complaint.submitted_at)
        try:
            selection = select_specialists(
                complaint, self.registry, self.gateway,
                max_specialists=self.config.max_specialists,
                default_specialty=self.config.default_specialty,
            )
            session.log(
                "specialists_selected",
                specialties=[p.specialty for p in selection.profiles],
                justification=selection.justification,
                fallback=selection.fallback,
            )
            generals = [p for p in self.registry if p.role == GENERAL]
            if self.include_general_agent and generals:
                session.team_slot.form(selection.profiles, generals[0], complaint)
            else:
                # ablation path: no general member joins the team
                session.team_slot.team = AgentTeam(
                    specialists=tuple(selection.profiles), general=None,
                    formed_for=complaint.digest(),
                )
            team = session.team_slot.team
            session.log("team_formed", members=[p.id for p in team.members()], digest=team.digest())
            self._prepare_round(session)
        except Exception as exc:  # noqa: BLE001 - any stage error aborts the session
            self._abort(session, exc)
        return session

    def submit_answers(self, session: EngineSession, answers: Sequence[str]) -> None:
        if session.finished:
            raise RuntimeError("session already finished")
        if len(answers) != len(session.pending):
            raise ValueError(f"expected {len(session.pending)} answers, got {len(answers)}")
        try:
            questions = list(session.pending)
            session.state = session.state.with_turns(
                [(q.text, a) for q, a in zip(questions, answers)]
            )
            session.pending = ()
            session.log(
                "answers",
                round=session.round_no,
                turns=[
                    {"index": t.index, "question": t.question, "answer": t.answer}
                    for t in session.state.turns[-len(questions):]
                ],
            )
            stop = self._stop_rule(session.round_no, session.state, session.last_record, self.gateway)
            session.log("sufficiency", round=session.round_no, stop=bool(stop))
            if stop or session.round_no >= self.config.max_rounds:
                self._finalize(session)
            else:
                self._prepare_round(session)
        except Exception as exc:  # noqa: BLE001
            self._abort(session, exc)

    def _prepare_round(self, session: EngineSession) -> None:
        team = session.team_slot.team
        assert team is not None
        session.round_no += 1
        record = summarize_record(session.state, self.gateway, self.tqs)
        session.last_record = record
        session.log("record_summarized", round=session.round_no, record=record.to_dict())

        def propose(member: AgentProfile) -> list[Question]:
            return propose_questions(member, session.state, self.gateway,
                                     per_agent=self.config.questions_per_agent)

        proposals = _fanout(propose, team.members())
        for member, questions in zip(team.members(), proposals):
            session.log("questions_proposed", round=session.round_no, agent=member.id,
                        questions=_question_payload(questions))
        spec_qs = [q for member, qs in zip(team.members(), proposals)
                   for q in qs if member.role != GENERAL]
        gen_qs = [q for member, qs in zip(team.members(), proposals)
                  for q in qs if member.role == GENERAL]
        merged = merge_initial_questions(spec_qs, gen_qs)
        session.log("questions_merged", round=session.round_no,
                    questions=_question_payload(merged))
        final, rounds = refine_to_final(merged, record, team, self.gateway,
                                        self.embedder, self.tqs, self.config)
        for rnd in rounds:
            session.log(
                "refinement",
                round=session.round_no,
                sub_iteration=rnd.sub_iteration,
                scores=[
                    {"text": sq.question.text, "com": sq.com_score,
                     "per": sq.per_score, "total": sq.total_score}
                    for sq in rnd.evaluated
                ],
                summary=rnd.evaluation_summary,
                modifications=[{"agent": a, "suggestion": s} for a, s in rnd.modifications],
                optimized=[q.text for q in rnd.optimized],
                consensus=rnd.consensus,
            )
        session.pending = tuple(final)
        session.log("final_questions", round=session.round_no, questions=_question_payload(final))

    def _finalize(self, session: EngineSession) -> None:
        record = summarize_record(session.state, self.gateway, self.tqs).finalize()
        session.final_record = record
        session.finished = True
        session.log("record_finalized", record=record.to_dict())

    def _abort(self, session: EngineSession, exc: Exception) -> None:
        session.finished = True
        session.aborted = True
        session.error = f"{type(exc).__name__}: {exc}"
        session.log("aborted", error=session.error)


def run_consultation(
    complaint: ChiefComplaint,
    registry: list[AgentProfile],
    config: SessionConfig,
    answer_source: AnswerSource,
    gateway: ChatBackend,
    embedder: EmbeddingBackend,
    tqs: TqsConfig | None = None,
    include_general_agent: bool = True,
) -> ConsultationResult:
    """Run a whole consultation against an answer source and return R_f plus transcript."""
    engine = ConsultationEngine(registry, config, gateway, embedder, tqs,
                                include_general_agent=include_general_agent)
    session = engine.start(complaint)
    while not session.finished:
        try:
            answers = [answer_source.answer(q, session.state) for q in session.pending]
        except TimeoutError as exc:
            engine._abort(session, AnswerTimeout(str(exc)))
            break
        except Exception as exc:  # noqa: BLE001 - simulator errors abort the session
            engine._abort(session, SimulatorFailure(f"{type(exc).__name__}: {exc}"))
            break
        engine.submit_answers(session, answers)
    return ConsultationResult(
        record=session.final_record,
        transcript=session.transcript,
        state=session.state,
        aborted=session.aborted,
        error=session.error,
    )
