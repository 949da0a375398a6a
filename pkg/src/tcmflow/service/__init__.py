"""HTTP service: live consultation sessions persisted as append-only event logs."""

from tcmflow.service.app import create_app
from tcmflow.service.manager import (
    AnswerCountMismatch,
    PhaseViolation,
    SessionManager,
    UnknownSession,
)
from tcmflow.service.store import SessionStore

__all__ = [
    "AnswerCountMismatch",
    "PhaseViolation",
    "SessionManager",
    "SessionStore",
    "UnknownSession",
    "create_app",
]
