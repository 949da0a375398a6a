"""Multi-agent consultation: per-round question generation, scoring, refinement."""

from tcmflow.consultation.engine import (
    AnswerTimeout,
    BothEmpty,
    ConsultationEngine,
    ConsultationResult,
    EmptyGeneration,
    EngineSession,
    QueueAnswerSource,
    RefinementRound,
    SessionConfig,
    SimulatorFailure,
    conduct_round,
    evaluate_questions,
    merge_initial_questions,
    optimize_questions,
    propose_questions,
    refine_to_final,
    run_consultation,
    summarize_record,
)
from tcmflow.consultation.scoring import EmptyQuestionList, ScoredQuestion, score_questions

__all__ = [
    "AnswerTimeout",
    "BothEmpty",
    "ConsultationEngine",
    "ConsultationResult",
    "EmptyGeneration",
    "EmptyQuestionList",
    "EngineSession",
    "QueueAnswerSource",
    "RefinementRound",
    "ScoredQuestion",
    "SessionConfig",
    "SimulatorFailure",
    "conduct_round",
    "evaluate_questions",
    "merge_initial_questions",
    "optimize_questions",
    "propose_questions",
    "refine_to_final",
    "run_consultation",
    "score_questions",
    "summarize_record",
]
