"""Okapi BM25 over an in-memory inverted index.

Scoring uses the strictly positive idf variant ln(1 + (N - df + 0.5)/(df + 0.5))
with k1=1.2, b=0.75 by default; each unique query token contributes once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tcmflow import kernels
from tcmflow.retrieval.tokenize import tokenize

SNAPSHOT_FORMAT = "tcmflow-sparse-index"
SNAPSHOT_VERSION = 1


class EmptyQuery(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseIndex:
    ids: tuple[str, ...]
    doc_lens: np.ndarray
    avgdl: float
    postings: dict[str, tuple[np.ndarray, np.ndarray]]  # token -> (doc indices, tfs)
    idf: dict[str, float]
    k1: float = 1.2
    b: float = 0.75

    @property
    def n_docs(self) -> int:
        return len(self.ids)


def build_sparse_index(docs: list[tuple[str, str]], k1: float = 1.2, b: float = 0.75) -> SparseIndex:
    """Index (id, text) pairs; ids must be unique."""
    ids = tuple(doc_id for doc_id, _ in docs)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate document ids")
    token_lists = [tokenize(text) for _, text in docs]
    doc_lens = np.array([float(len(toks)) for toks in token_lists])
    total = float(doc_lens.sum())
    avgdl = total / len(docs) if docs else 0.0
    by_token: dict[str, dict[int, int]] = {}
    for doc_idx, toks in enumerate(token_lists):
        for tok in toks:
            by_token.setdefault(tok, {})
            by_token[tok][doc_idx] = by_token[tok].get(doc_idx, 0) + 1
    postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    idf: dict[str, float] = {}
    n = len(docs)
    for tok, tf_map in by_token.items():
        doc_idx = np.array(sorted(tf_map), dtype=np.int64)
        tfs = np.array([float(tf_map[d]) for d in doc_idx])
        postings[tok] = (doc_idx, tfs)
        df = len(tf_map)
        idf[tok] = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
    return SparseIndex(ids=ids, doc_lens=doc_lens, avgdl=avgdl, postings=postings,
                       idf=idf, k1=k1, b=b)


def bm25_scores(index: SparseIndex, query: str) -> np.ndarray:
    """Per-document BM25 scores for the query (unique tokens, first-seen order)."""
    tokens = tokenize(query)
    if not tokens:
        raise EmptyQuery("query has no tokens")
    seen: set[str] = set()
    doc_chunks: list[np.ndarray] = []
    tf_chunks: list[np.ndarray] = []
    idf_chunks: list[np.ndarray] = []
    for tok in tokens:
        if tok in seen or tok not in index.postings:
            seen.add(tok)
            continue
        seen.add(tok)
        doc_idx, tfs = index.postings[tok]
        doc_chunks.append(doc_idx)
        tf_chunks.append(tfs)
        idf_chunks.append(np.full(len(doc_idx), index.idf[tok]))
    if not doc_chunks:
        return np.zeros(index.n_docs)
    return kernels.bm25_accumulate(
        np.concatenate(doc_chunks),
        np.concatenate(tf_chunks),
        np.concatenate(idf_chunks),
        index.doc_lens,
        index.avgdl,
        index.k1,
        index.b,
        index.n_docs,
    )


def sparse_search(query: str, index: SparseIndex, n: int) -> list[tuple[str, float]]:
    """Top-n (id, score) by BM25, descending; zero-score docs excluded, ties by id."""
    scores = bm25_scores(index, query)
    hits = [(index.ids[i], float(scores[i])) for i in range(index.n_docs) if scores[i] > 0.0]
    hits.sort(key=lambda pair: (-pair[1], pair[0]))
    return hits[:n]


def save_index_snapshot(index: SparseIndex, path: str | Path) -> None:
    payload = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "k1": index.k1,
        "b": index.b,
        "ids": list(index.ids),
        "doc_lens": index.doc_lens.tolist(),
        "avgdl": index.avgdl,
        "postings": {
            tok: [[int(d), float(tf)] for d, tf in zip(doc_idx, tfs)]
            for tok, (doc_idx, tfs) in sorted(index.postings.items())
        },
        "idf": dict(sorted(index.idf.items())),
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, sort_keys=True), encoding="utf-8")


def load_index_snapshot(path: str | Path) -> SparseIndex:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != SNAPSHOT_FORMAT or payload.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported index snapshot: {payload.get('format')!r} "
                         f"v{payload.get('version')!r}")
    postings = {
        tok: (
            np.array([row[0] for row in rows], dtype=np.int64),
            np.array([row[1] for row in rows]),
        )
        for tok, rows in payload["postings"].items()
    }
    return SparseIndex(
        ids=tuple(payload["ids"]),
        doc_lens=np.array(payload["doc_lens"]),
        avgdl=float(payload["avgdl"]),
        postings=postings,
        idf={tok: float(v) for tok, v in payload["idf"].items()},
        k1=float(payload["k1"]),
        b=float(payload["b"]),
    )
