"""Hot numeric kernels: numba-jitted by default, pure numpy when TCMFLOW_PURE_NUMPY=1.

Both paths produce bit-identical results: every kernel accumulates exact
integer-valued floats or applies IEEE ops in the same order, so flipping the
flag never changes test outcomes, only speed. See benchmarks/bench_kernels.py.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("TCMFLOW_PURE_NUMPY", "").strip().lower()
PURE_NUMPY = _FLAG in {"1", "true", "yes"}

if not PURE_NUMPY:
    try:
        from numba import njit
    except ImportError:
        PURE_NUMPY = True


def _signed_counts_py(indices: np.ndarray, signs: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros(dim, dtype=np.float64)
    np.add.at(out, indices, signs)
    return out


def _bm25_accumulate_py(
    post_doc: np.ndarray,
    post_tf: np.ndarray,
    post_idf: np.ndarray,
    doc_lens: np.ndarray,
    avgdl: float,
    k1: float,
    b: float,
    n_docs: int,
) -> np.ndarray:
    scores = np.zeros(n_docs, dtype=np.float64)
    if post_doc.shape[0] == 0:
        return scores
    norm = k1 * (1.0 - b + b * doc_lens[post_doc] / avgdl)
    contrib = post_idf * (post_tf * (k1 + 1.0)) / (post_tf + norm)
    # unbuffered add keeps per-doc accumulation in posting order
    np.add.at(scores, post_doc, contrib)
    return scores


def _resample_sums_py(values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return values[idx].sum(axis=1)


if PURE_NUMPY:
    signed_counts = _signed_counts_py
    bm25_accumulate = _bm25_accumulate_py
    resample_sums = _resample_sums_py
else:

    @njit(cache=True)
    def signed_counts(indices, signs, dim):  # type: ignore[misc]
        out = np.zeros(dim, dtype=np.float64)
        for i in range(indices.shape[0]):
            out[indices[i]] += signs[i]
        return out

    @njit(cache=True)
    def bm25_accumulate(post_doc, post_tf, post_idf, doc_lens, avgdl, k1, b, n_docs):  # type: ignore[misc]
        scores = np.zeros(n_docs, dtype=np.float64)
        for i in range(post_doc.shape[0]):
            d = post_doc[i]
            tf = post_tf[i]
            denom = tf + k1 * (1.0 - b + b * doc_lens[d] / avgdl)
            scores[d] += post_idf[i] * (tf * (k1 + 1.0)) / denom
        return scores

    @njit(cache=True)
    def resample_sums(values, idx):  # type: ignore[misc]
        n_rows, n_cols = idx.shape
        out = np.empty(n_rows, dtype=np.float64)
        for r in range(n_rows):
            acc = 0.0
            for c in range(n_cols):
                acc += values[idx[r, c]]
            out[r] = acc
        return out


def backend_name() -> str:
    return "numpy" if PURE_NUMPY else "numba"


def warmup() -> None:
    """Trigger JIT compilation outside any timed section."""
    signed_counts(np.array([0, 1], dtype=np.int64), np.array([1.0, -1.0]), 4)
    bm25_accumulate(
        np.array([0], dtype=np.int64),
        np.array([1.0]),
        np.array([0.5]),
        np.array([3.0]),
        3.0,
        1.2,
        0.75,
        1,
    )
    resample_sums(np.array([1.0, 0.0]), np.array([[0, 1]], dtype=np.int64))
