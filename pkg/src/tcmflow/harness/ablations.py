"""Directional ablation runners: general-agent removal and retrieval staging."""

from __future__ import annotations

import json
from dataclasses import dataclass

from tcmflow.consultation.engine import ConsultationEngine
from tcmflow.gateway.base import ChatBackend, EmbeddingBackend, cosine, embed
from tcmflow.harness.batch import run_simulated_consultation, transcript_rounds
from tcmflow.harness.judging import pairwise_judge
from tcmflow.knowledge import CaseRecord, PrescriptionEntry, TqsConfig
from tcmflow.records import MedicalRecord
from tcmflow.retrieval.dense import entry_embedding_text
from tcmflow.retrieval.pipeline import RetrievalConfig, recommend, single_stage_search
from tcmflow.syndrome import SyndromePrediction


def transcript_text(transcript: list[dict]) -> str:
    """Flatten a transcript into judge-readable text: dialogue plus final record."""
    lines = []
    for event in transcript:
        kind = event.get("event")
        if kind == "session_started":
            lines.append(f"Chief complaint: {event['complaint']}")
        elif kind == "answers":
            for turn in event["turns"]:
                lines.append(f"Q: {turn['question']}")
                lines.append(f"A: {turn['answer']}")
        elif kind == "record_finalized":
            record = event["record"]
            lines.append(f"Record: {record['raw_summary']}")
            for name, text in sorted(record["sections"].items()):
                lines.append(f"{name}: {text}")
    return "\n".join(lines)


def merged_questions(transcript: list[dict]) -> list[dict]:
    out = []
    for event in transcript:
        if event.get("event") == "questions_merged":
            out.extend(event["questions"])
    return out


def covered_categories(transcript: list[dict], tqs: TqsConfig) -> set[str]:
    """Inquiry categories whose canonical text was proposed verbatim in any merged set."""
    by_text = {item.canonical_text: item.name for item in tqs.items}
    covered = set()
    for question in merged_questions(transcript):
        name = by_text.get(question["text"])
        if name is not None:
            covered.add(name)
    return covered


@dataclass(frozen=True)
class GeneralAgentAblationReport:
    selection_counts: dict[str, int]
    mean_rounds: dict[str, float]
    per_case: tuple[dict, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "selection_counts": dict(sorted(self.selection_counts.items())),
                "mean_rounds": dict(sorted(self.mean_rounds.items())),
                "cases": list(self.per_case),
            },
            ensure_ascii=False, sort_keys=True, indent=2,
        )


def ablate_general_agent(
    cases: list[CaseRecord],
    engine_full: ConsultationEngine,
    engine_ablated: ConsultationEngine,
    judge_gateway: ChatBackend,
    dimension: str = "overall",
) -> GeneralAgentAblationReport:
    """Run each case under both team configurations and judge which transcript wins."""
    counts = {"full": 0, "ablated": 0, "tie": 0}
    rounds = {"full": 0, "ablated": 0}
    per_case = []
    for case in cases:
        full = run_simulated_consultation(case, engine_full)
        ablated = run_simulated_consultation(case, engine_ablated)
        outcome = pairwise_judge(
            transcript_text(full.transcript), transcript_text(ablated.transcript),
            dimension, judge_gateway, case_id=case.id,
        )
        picked = {"win": "full", "loss": "ablated", "tie": "tie"}[outcome.verdict]
        counts[picked] += 1
        full_rounds = transcript_rounds(full.transcript)
        ablated_rounds = transcript_rounds(ablated.transcript)
        rounds["full"] += full_rounds
        rounds["ablated"] += ablated_rounds
        general_full = sum(1 for q in merged_questions(full.transcript) if q["kind"] == "general")
        general_ablated = sum(1 for q in merged_questions(ablated.transcript) if q["kind"] == "general")
        per_case.append({
            "case_id": case.id,
            "selected": picked,
            "rounds": {"full": full_rounds, "ablated": ablated_rounds},
            "general_questions": {"full": general_full, "ablated": general_ablated},
            "categories_covered": {
                "full": sorted(covered_categories(full.transcript, engine_full.tqs)),
                "ablated": sorted(covered_categories(ablated.transcript, engine_ablated.tqs)),
            },
        })
    n = max(len(cases), 1)
    return GeneralAgentAblationReport(
        selection_counts=counts,
        mean_rounds={"full": rounds["full"] / n, "ablated": rounds["ablated"] / n},
        per_case=tuple(per_case),
    )


def record_from_case(case: CaseRecord) -> MedicalRecord:
    return MedicalRecord(sections=dict(case.tqs_extract or {}), raw_summary=case.narrative,
                         round=0, finalized=True)


@dataclass(frozen=True)
class DualStageAblationReport:
    hit_rate_dual: float
    hit_rate_single: float
    wins: int
    losses: int
    ties: int
    skipped_missing_gold: int
    per_case: tuple[dict, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "hit_rate_dual": self.hit_rate_dual,
                "hit_rate_single": self.hit_rate_single,
                "wins": self.wins,
                "losses": self.losses,
                "ties": self.ties,
                "skipped_missing_gold": self.skipped_missing_gold,
                "cases": list(self.per_case),
            },
            ensure_ascii=False, sort_keys=True, indent=2,
        )


def ablate_dual_stage_retrieval(
    cases: list[CaseRecord],
    db: list[PrescriptionEntry],
    embedder: EmbeddingBackend,
    config: RetrievalConfig | None = None,
    gateway: ChatBackend | None = None,
) -> DualStageAblationReport:
    """Compare two-stage retrieval against the single-stage dense baseline per case.

    Hits check the gold formula inside each Top-3; wins/losses compare how close
    each method's Top-1 entry lands to the case's reference entry (the db entry
    carrying the gold formula), falling back to the narrative when no entry does.
    """
    config = config or RetrievalConfig()
    by_id = {entry.id: entry for entry in db}
    by_formula: dict[str, PrescriptionEntry] = {}
    for e in db:
        by_formula.setdefault(e.representative_formula, e)
    dual_hits = single_hits = wins = losses = ties = skipped = 0
    per_case = []
    scored = 0
    for case in cases:
        if not case.gold_formula:
            skipped += 1
            continue
        scored += 1
        record = record_from_case(case)
        label = case.gold_syndrome or "unknown"
        prediction = SyndromePrediction(label=label, confidence=1.0,
                                        rationale="gold label", classifier_id="gold")
        dual = recommend(record, prediction, db, gateway, embedder, config)
        single = single_stage_search(record, db, embedder, n=config.top_n)
        dual_hit = any(
            by_id[r.entry_id].representative_formula == case.gold_formula for r in dual.ranked
        )
        single_hit = any(
            by_id[doc_id].representative_formula == case.gold_formula for doc_id, _ in single
        )
        dual_hits += dual_hit
        single_hits += single_hit
        reference = by_formula.get(case.gold_formula)
        reference_text = entry_embedding_text(reference) if reference else case.narrative
        reference_vec, = embed([reference_text], embedder)

        def top1_sim(entry_id: str | None) -> float:
            if entry_id is None:
                return 0.0
            entry_vec, = embed([entry_embedding_text(by_id[entry_id])], embedder)
            return cosine(reference_vec, entry_vec)

        dual_sim = top1_sim(dual.ranked[0].entry_id if dual.ranked else None)
        single_sim = top1_sim(single[0][0] if single else None)
        if dual_sim > single_sim:
            wins += 1
        elif dual_sim < single_sim:
            losses += 1
        else:
            ties += 1
        per_case.append({
            "case_id": case.id,
            "dual_hit": dual_hit,
            "single_hit": single_hit,
            "dual_top1_sim": dual_sim,
            "single_top1_sim": single_sim,
        })
    denom = max(scored, 1)
    return DualStageAblationReport(
        hit_rate_dual=dual_hits / denom,
        hit_rate_single=single_hits / denom,
        wins=wins, losses=losses, ties=ties,
        skipped_missing_gold=skipped,
        per_case=tuple(per_case),
    )
