"""Deterministic offline text embedder based on character-bigram feature hashing."""

from __future__ import annotations

import hashlib

import numpy as np

from tcmflow import kernels

_START = "\x02"
_END = "\x03"


def _bigram_features(text: str, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Hash each boundary-padded character bigram to a (bucket, sign) pair.

    blake2b keeps the mapping content-addressed: the same string yields the
    same features in every process, with no seed involved.
    """
    padded = _START + text + _END
    n = len(padded) - 1
    indices = np.empty(n, dtype=np.int64)
    signs = np.empty(n, dtype=np.float64)
    for i in range(n):
        digest = hashlib.blake2b(padded[i : i + 2].encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        indices[i] = (value >> 1) % dim
        signs[i] = 1.0 if value & 1 else -1.0
    return indices, signs


class HashedBigramEmbedder:
    """L2-normalized signed bigram counts hashed into a fixed number of buckets.

    Vectors are cached per text; the construction is pure, so the cache is safe
    to share across threads.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        indices, signs = _bigram_features(text, self.dim)
        counts = kernels.signed_counts(indices, signs, self.dim)
        norm = float(np.sqrt(np.dot(counts, counts)))
        vec = counts / norm if norm > 0.0 else counts
        vec.setflags(write=False)
        self._cache[text] = vec
        return vec

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self._vector(t) for t in texts]
