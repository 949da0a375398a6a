"""Session lifecycle over the consultation engine: phases, persistence, recovery."""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from tcmflow.agents import AgentTeam
from tcmflow.consultation.engine import ConsultationEngine, EngineSession
from tcmflow.knowledge import PrescriptionEntry
from tcmflow.records import ChiefComplaint, ConsultationState, MedicalRecord, Question
from tcmflow.retrieval.pipeline import RetrievalConfig, recommend
from tcmflow.service.store import SessionStore
from tcmflow.syndrome import Classifier, differentiate

PHASES = ("consulting", "awaiting_answer", "differentiating", "recommending", "done", "aborted")
TERMINAL_PHASES = ("done", "aborted")


class UnknownSession(KeyError):
    pass


class PhaseViolation(RuntimeError):
    pass


class AnswerCountMismatch(ValueError):
    pass


@dataclass
class ServiceSession:
    session_id: str
    engine_session: EngineSession
    phase: str = "consulting"
    syndrome: dict | None = None
    prescriptions: list[dict] | None = None
    persisted_events: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionManager:
    """Creates, advances, persists, and recovers consultation sessions.

    Requests for one session serialize on its lock; different sessions run
    concurrently. Every transcript event is appended to the store before the
    call returns, so a restart replays sessions exactly.
    """

    def __init__(
        self,
        engine: ConsultationEngine,
        classifier: Classifier,
        db: list[PrescriptionEntry],
        store: SessionStore,
        retrieval_config: RetrievalConfig | None = None,
    ):
        self.engine = engine
        self.classifier = classifier
        self.db = db
        self.store = store
        self.retrieval_config = retrieval_config or RetrievalConfig()
        self._sessions: dict[str, ServiceSession] = {}
        self._registry_lock = threading.Lock()
        self._recover()

    # -- lifecycle ---------------------------------------------------------

    def create_session(self, complaint_text: str, submitted_at: str | None = None) -> dict:
        if not complaint_text.strip():
            raise ValueError("complaint must be non-empty")
        complaint = ChiefComplaint(
            text=complaint_text,
            submitted_at=submitted_at or "unspecified",
        )
        session_id = uuid.uuid4().hex
        engine_session = self.engine.start(complaint)
        session = ServiceSession(session_id=session_id, engine_session=engine_session)
        if engine_session.aborted:
            session.phase = "aborted"
        elif engine_session.finished:
            session.phase = "done"
        else:
            session.phase = "awaiting_answer"
        self._persist(session)
        self._log_phase(session)
        with self._registry_lock:
            self._sessions[session_id] = session
        return self.get_state(session_id)

    def post_answer(self, session_id: str, answers: list[str]) -> dict:
        session = self._get(session_id)
        with session.lock:
            if session.phase != "awaiting_answer":
                raise PhaseViolation(f"session is {session.phase}, not awaiting answers")
            pending = session.engine_session.pending
            if len(answers) != len(pending):
                raise AnswerCountMismatch(f"{len(pending)} questions pending, {len(answers)} answers posted")
            self.engine.submit_answers(session.engine_session, answers)
            self._persist(session)
            if session.engine_session.aborted:
                session.phase = "aborted"
                self._log_phase(session)
            elif session.engine_session.finished:
                self._finish(session)
            else:
                session.phase = "awaiting_answer"
            return self._view(session)

    def get_state(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            return self._view(session)

    def session_ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._sessions)

    # -- internals ---------------------------------------------------------

    def _get(self, session_id: str) -> ServiceSession:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def _finish(self, session: ServiceSession) -> None:
        record = session.engine_session.final_record
        assert record is not None
        session.phase = "differentiating"
        self._log_phase(session)
        try:
            prediction = differentiate(record, self.classifier)
            session.syndrome = {
                "label": prediction.label,
                "confidence": prediction.confidence,
                "rationale": prediction.rationale,
                "classifier_id": prediction.classifier_id,
            }
            self._append(session, {"event": "syndrome", **session.syndrome})
            session.phase = "recommending"
            self._log_phase(session)
            result = recommend(record, prediction, self.db, self.engine.gateway,
                               self.engine.embedder, self.retrieval_config)
            session.prescriptions = [r.to_dict() for r in result.ranked]
            self._append(session, {"event": "recommendation", "result": result.to_dict()})
            session.phase = "done"
            self._log_phase(session)
        except Exception as exc:  # noqa: BLE001 - abort terminally, keep transcript
            session.engine_session.error = f"{type(exc).__name__}: {exc}"
            self._append(session, {"event": "aborted", "error": session.engine_session.error})
            session.phase = "aborted"
            self._log_phase(session)

    def _append(self, session: ServiceSession, event: dict) -> None:
        session.engine_session.transcript.append(event)
        self._persist(session)

    def _log_phase(self, session: ServiceSession) -> None:
        self._append(session, {"event": "phase", "phase": session.phase})

    def _persist(self, session: ServiceSession) -> None:
        transcript = session.engine_session.transcript
        while session.persisted_events < len(transcript):
            self.store.append(session.session_id, transcript[session.persisted_events])
            session.persisted_events += 1

    def _view(self, session: ServiceSession) -> dict:
        engine_session = session.engine_session
        view = {
            "session_id": session.session_id,
            "phase": session.phase,
            "round": engine_session.round_no,
            "complaint": engine_session.complaint.text,
            "questions": [
                {"text": q.text, "rationale": q.rationale, "source": q.source, "kind": q.kind}
                for q in engine_session.pending
            ],
            "transcript": list(engine_session.transcript),
            "error": engine_session.error,
        }
        if session.phase == "done":
            record = engine_session.final_record
            view["result"] = {
                "record": record.to_dict() if record else None,
                "syndrome": session.syndrome,
                "prescriptions": session.prescriptions or [],
            }
        return view

    # -- recovery ----------------------------------------------------------

    def _recover(self) -> None:
        for session_id in self.store.list_sessions():
            events = self.store.load(session_id)
            if not events:
                continue
            session = self._rebuild(session_id, events)
            if session is not None:
                self._sessions[session_id] = session

    def _rebuild(self, session_id: str, events: list[dict]) -> ServiceSession | None:
        complaint: ChiefComplaint | None = None
        pending: tuple[Question, ...] = ()
        turns: list[tuple[str, str]] = []
        team_ids: list[str] = []
        last_record: MedicalRecord | None = None
        final_record: MedicalRecord | None = None
        round_no = 0
        phase = "awaiting_answer"
        syndrome = None
        prescriptions = None
        for event in events:
            kind = event.get("event")
            if kind == "session_started":
                complaint = ChiefComplaint(text=event["complaint"],
                                           submitted_at=event["submitted_at"])
            elif kind == "team_formed":
                team_ids = list(event["members"])
            elif kind == "record_summarized":
                last_record = MedicalRecord.from_dict(event["record"])
                round_no = event["round"]
            elif kind == "final_questions":
                pending = tuple(
                    Question(text=q["text"], rationale=q["rationale"],
                             source=q["source"], kind=q["kind"])
                    for q in event["questions"]
                )
                round_no = event["round"]
            elif kind == "answers":
                turns.extend((t["question"], t["answer"]) for t in event["turns"])
                pending = ()
            elif kind == "record_finalized":
                final_record = MedicalRecord.from_dict(event["record"])
            elif kind == "syndrome":
                syndrome = {k: v for k, v in event.items() if k != "event"}
            elif kind == "recommendation":
                prescriptions = event["result"]["ranked"]
            elif kind == "phase":
                phase = event["phase"]
        if complaint is None:
            return None
        state = ConsultationState(chief_complaint=complaint).with_turns(turns)
        engine_session = EngineSession(
            complaint=complaint,
            config=self.engine.config,
            state=state,
            transcript=list(events),
            pending=pending,
            round_no=round_no,
            last_record=last_record,
            final_record=final_record,
            finished=phase in TERMINAL_PHASES,
            aborted=phase == "aborted",
        )
        by_id = {p.id: p for p in self.engine.registry}
        members = [by_id[i] for i in team_ids if i in by_id]
        specialists = tuple(p for p in members if p.role == "specialist")
        generals = [p for p in members if p.role == "general"]
        if specialists:
            engine_session.team_slot.team = AgentTeam(
                specialists=specialists,
                general=generals[0] if generals else None,
                formed_for=complaint.digest(),
            )
        session = ServiceSession(
            session_id=session_id,
            engine_session=engine_session,
            phase=phase,
            syndrome=syndrome,
            prescriptions=prescriptions,
            persisted_events=len(events),
        )
        return session
