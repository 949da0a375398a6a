"""Prescription retrieval: attribute filtering, hybrid ranking, rank fusion."""

from tcmflow.retrieval.dense import EmbedderFailure, dense_search, entry_embedding_text
from tcmflow.retrieval.fuse import MalformedRanking, rrf_fuse
from tcmflow.retrieval.pipeline import (
    EmptyDatabase,
    FilterResult,
    RankedPrescription,
    RecommendationResult,
    RetrievalConfig,
    SyndromeAttributes,
    extract_syndrome_attributes,
    filter_candidates,
    recommend,
    single_stage_search,
)
from tcmflow.retrieval.sparse import (
    EmptyQuery,
    SparseIndex,
    bm25_scores,
    build_sparse_index,
    load_index_snapshot,
    save_index_snapshot,
    sparse_search,
)
from tcmflow.retrieval.tokenize import tokenize

__all__ = [
    "EmbedderFailure",
    "EmptyDatabase",
    "EmptyQuery",
    "FilterResult",
    "MalformedRanking",
    "RankedPrescription",
    "RecommendationResult",
    "RetrievalConfig",
    "SparseIndex",
    "SyndromeAttributes",
    "bm25_scores",
    "build_sparse_index",
    "dense_search",
    "entry_embedding_text",
    "extract_syndrome_attributes",
    "filter_candidates",
    "load_index_snapshot",
    "recommend",
    "rrf_fuse",
    "save_index_snapshot",
    "single_stage_search",
    "sparse_search",
    "tokenize",
]
