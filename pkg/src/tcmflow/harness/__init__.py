"""Desk-scale evaluation machinery: simulated patients, text metrics, judging, ablations."""

from tcmflow.harness.ablations import (
    DualStageAblationReport,
    GeneralAgentAblationReport,
    ablate_dual_stage_retrieval,
    ablate_general_agent,
)
from tcmflow.harness.batch import (
    BatchReport,
    CaseOutcome,
    complaint_from_case,
    run_batch,
    run_simulated_consultation,
)
from tcmflow.harness.bootstrap import CiResult, InsufficientData, confidence_interval
from tcmflow.harness.judging import (
    DIMENSIONS,
    PairwiseOutcome,
    UnparseableVerdict,
    pairwise_judge,
)
from tcmflow.harness.patient import SimulatedPatient, simulate_patient_answer
from tcmflow.harness.textmetrics import (
    EmptyReference,
    LengthMismatch,
    SimilarityReport,
    bleu1,
    similarity_stats,
)

__all__ = [
    "BatchReport",
    "CaseOutcome",
    "CiResult",
    "DIMENSIONS",
    "DualStageAblationReport",
    "EmptyReference",
    "GeneralAgentAblationReport",
    "InsufficientData",
    "LengthMismatch",
    "PairwiseOutcome",
    "SimilarityReport",
    "SimulatedPatient",
    "UnparseableVerdict",
    "ablate_dual_stage_retrieval",
    "ablate_general_agent",
    "bleu1",
    "complaint_from_case",
    "confidence_interval",
    "pairwise_judge",
    "run_batch",
    "run_simulated_consultation",
    "similarity_stats",
    "simulate_patient_answer",
]
