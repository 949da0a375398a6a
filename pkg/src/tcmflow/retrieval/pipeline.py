"""Two-stage prescription recommendation: attribute filter, then hybrid ranking."""

from __future__ import annotations

from dataclasses import dataclass

from tcmflow import prompts
from tcmflow.gateway.base import ChatBackend, ChatExchange, EmbeddingBackend, chat
from tcmflow.knowledge import PrescriptionEntry
from tcmflow.parsing import extract_json
from tcmflow.records import MedicalRecord
from tcmflow.retrieval.dense import dense_search
from tcmflow.retrieval.fuse import rrf_fuse
from tcmflow.retrieval.sparse import EmptyQuery, build_sparse_index, sparse_search
from tcmflow.syndrome import SyndromePrediction


class EmptyDatabase(ValueError):
    pass


@dataclass(frozen=True)
class SyndromeAttributes:
    """Stage-1 filter keys; absent fields simply do not constrain the filter."""

    syndrome_type: str | None = None
    etiology: str | None = None
    affected_organ: str | None = None
    degraded: bool = False

    def present(self) -> dict[str, str]:
        fields = {
            "syndrome_type": self.syndrome_type,
            "etiology": self.etiology,
            "affected_organ": self.affected_organ,
        }
        return {name: value for name, value in fields.items() if value is not None}


@dataclass(frozen=True)
class FilterResult:
    entries: tuple[PrescriptionEntry, ...]
    degenerate: bool = False  # no attributes were present, nothing was filtered
    fallback: bool = False  # attributes matched nothing; full db returned instead


@dataclass(frozen=True)
class RankedPrescription:
    entry_id: str
    sparse_rank: int | None
    dense_rank: int | None
    rrf_score: float
    final_rank: int

    def __post_init__(self) -> None:
        if self.sparse_rank is None and self.dense_rank is None:
            raise ValueError("a ranked entry needs at least one per-leg rank")

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "sparse_rank": self.sparse_rank,
            "dense_rank": self.dense_rank,
            "rrf_score": self.rrf_score,
            "final_rank": self.final_rank,
        }


@dataclass(frozen=True)
class RetrievalConfig:
    rrf_k: float = 60.0
    per_leg_depth: int = 50
    top_n: int = 3
    k1: float = 1.2
    b: float = 0.75


@dataclass(frozen=True)
class RecommendationResult:
    ranked: tuple[RankedPrescription, ...]
    attributes: SyndromeAttributes
    filter_degenerate: bool
    filter_fallback: bool
    candidate_count: int
    query_text: str
    rationale: str

    def to_dict(self) -> dict:
        return {
            "ranked": [r.to_dict() for r in self.ranked],
            "attributes": self.attributes.present(),
            "attributes_degraded": self.attributes.degraded,
            "filter_degenerate": self.filter_degenerate,
            "filter_fallback": self.filter_fallback,
            "candidate_count": self.candidate_count,
            "rationale": self.rationale,
        }


def extract_syndrome_attributes(
    record: MedicalRecord,
    prediction: SyndromePrediction,
    gateway: ChatBackend,
) -> SyndromeAttributes:
    """Seed the syndrome type from the prediction; ask the gateway for the rest.

    A gateway failure degrades to the syndrome type alone rather than failing
    the recommendation.
    """
    system, user = prompts.treatment_attributes_prompt(record, prediction.label)
    try:
        exchange = chat(ChatExchange(system=system, user=user), gateway)
    except Exception:
        return SyndromeAttributes(syndrome_type=prediction.label, degraded=True)
    parsed = extract_json(exchange.response or "")
    etiology = organ = None
    if isinstance(parsed, dict):
        raw_etiology = parsed.get("etiology")
        raw_organ = parsed.get("affected_organ")
        etiology = raw_etiology.strip() if isinstance(raw_etiology, str) and raw_etiology.strip() else None
        organ = raw_organ.strip() if isinstance(raw_organ, str) and raw_organ.strip() else None
    return SyndromeAttributes(syndrome_type=prediction.label, etiology=etiology,
                              affected_organ=organ)


def _normalize(text: str) -> str:
    return " ".join(text.casefold().split())


def filter_candidates(db: list[PrescriptionEntry], attrs: SyndromeAttributes) -> FilterResult:
    """Keep entries matching every present attribute under normalized equality."""
    present = attrs.present()
    if not present:
        return FilterResult(entries=tuple(db), degenerate=True)
    wanted = {name: _normalize(value) for name, value in present.items()}
    kept = [
        entry for entry in db
        if all(_normalize(getattr(entry, name)) == value for name, value in wanted.items())
    ]
    if not kept:
        return FilterResult(entries=tuple(db), fallback=True)
    return FilterResult(entries=tuple(kept))


def _hybrid_rank(
    query: str,
    candidates: list[PrescriptionEntry],
    embedder: EmbeddingBackend,
    config: RetrievalConfig,
) -> tuple[list[RankedPrescription], dict[str, int], dict[str, int]]:
    index = build_sparse_index(
        [(e.id, f"{e.syndrome_type} {e.clinical_manifestations}") for e in candidates],
        k1=config.k1, b=config.b,
    )
    try:
        sparse_hits = sparse_search(query, index, config.per_leg_depth)
    except EmptyQuery:
        sparse_hits = []
    dense_hits = dense_search(query, candidates, embedder, config.per_leg_depth)
    sparse_ranks = {doc_id: pos for pos, (doc_id, _) in enumerate(sparse_hits, start=1)}
    dense_ranks = {doc_id: pos for pos, (doc_id, _) in enumerate(dense_hits, start=1)}
    fused = rrf_fuse([[d for d, _ in sparse_hits], [d for d, _ in dense_hits]], k=config.rrf_k)
    ranked = [
        RankedPrescription(
            entry_id=doc_id,
            sparse_rank=sparse_ranks.get(doc_id),
            dense_rank=dense_ranks.get(doc_id),
            rrf_score=score,
            final_rank=pos,
        )
        for pos, (doc_id, score) in enumerate(fused, start=1)
    ]
    return ranked, sparse_ranks, dense_ranks


def recommend(
    record: MedicalRecord,
    prediction: SyndromePrediction,
    db: list[PrescriptionEntry],
    gateway: ChatBackend | None,
    embedder: EmbeddingBackend,
    config: RetrievalConfig | None = None,
    attributes: SyndromeAttributes | None = None,
) -> RecommendationResult:
    """Full two-stage retrieval: filter by attributes, rank both legs, fuse, take top 3.

    Pass `attributes` to skip the gateway extraction step (gateway may then be None).
    """
    if not db:
        raise EmptyDatabase("prescription database is empty")
    config = config or RetrievalConfig()
    if attributes is not None:
        attrs = attributes
    elif gateway is None:
        attrs = SyndromeAttributes(syndrome_type=prediction.label)
    else:
        attrs = extract_syndrome_attributes(record, prediction, gateway)
    filtered = filter_candidates(db, attrs)
    query = record.full_text()
    ranked, _, _ = _hybrid_rank(query, list(filtered.entries), embedder, config)
    top = tuple(ranked[: config.top_n])
    stage1 = (
        "no attribute filter applied" if filtered.degenerate
        else "attribute filter matched nothing; searched the full database" if filtered.fallback
        else f"attribute filter kept {len(filtered.entries)} of {len(db)} entries"
    )
    rationale = (
        f"{stage1}; hybrid ranking fused lexical and semantic legs over "
        f"{len(filtered.entries)} candidates (rrf k={config.rrf_k:g})"
    )
    return RecommendationResult(
        ranked=top,
        attributes=attrs,
        filter_degenerate=filtered.degenerate,
        filter_fallback=filtered.fallback,
        candidate_count=len(filtered.entries),
        query_text=query,
        rationale=rationale,
    )


def single_stage_search(
    record: MedicalRecord,
    db: list[PrescriptionEntry],
    embedder: EmbeddingBackend,
    n: int = 3,
) -> list[tuple[str, float]]:
    """Ablation baseline: dense ranking over the full database, no filter, no sparse leg."""
    if not db:
        raise EmptyDatabase("prescription database is empty")
    return dense_search(record.full_text(), db, embedder, n)
