"""Benchmark the jitted kernels against the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py            # compare both paths
    python benchmarks/bench_kernels.py --single   # time the active path only

The comparison mode re-launches itself twice with TCMFLOW_PURE_NUMPY toggled,
because the path is chosen at import time.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_active_path(repeats: int = 5) -> dict:
    from tcmflow import kernels

    kernels.warmup()
    rng = np.random.default_rng(1)

    def timeit(fn) -> float:
        best = float("inf")
        for _ in range(repeats):
            start = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - start)
        return best

    n_feat = 200_000
    feat_idx = rng.integers(0, 256, size=n_feat).astype(np.int64)
    feat_signs = rng.choice([-1.0, 1.0], size=n_feat)

    n_docs, n_post = 5_000, 400_000
    post_doc = rng.integers(0, n_docs, size=n_post).astype(np.int64)
    post_tf = rng.integers(1, 6, size=n_post).astype(np.float64)
    post_idf = rng.uniform(0.1, 2.0, size=n_post)
    doc_lens = rng.integers(5, 200, size=n_docs).astype(np.float64)

    values = rng.integers(0, 2, size=200).astype(np.float64)
    idx = rng.integers(0, 200, size=(10_000, 200)).astype(np.int64)

    results = {
        "backend": kernels.backend_name(),
        "signed_counts_200k": timeit(lambda: kernels.signed_counts(feat_idx, feat_signs, 256)),
        "bm25_accumulate_400k": timeit(lambda: kernels.bm25_accumulate(
            post_doc, post_tf, post_idf, doc_lens, float(doc_lens.mean()),
            1.2, 0.75, n_docs)),
        "resample_sums_10k_x_200": timeit(lambda: kernels.resample_sums(values, idx)),
    }
    return results


def compare_paths() -> None:
    rows = []
    for flag in ("0", "1"):
        env = dict(os.environ, TCMFLOW_PURE_NUMPY=flag)
        out = subprocess.run([sys.executable, __file__, "--single"],
                             capture_output=True, env=env, check=True, text=True)
        rows.append(json.loads(out.stdout))
    keys = [k for k in rows[0] if k != "backend"]
    width = max(len(k) for k in keys)
    print(f"{'kernel':<{width}}  {rows[0]['backend']:>12}  {rows[1]['backend']:>12}  speedup")
    for key in keys:
        a, b = rows[0][key], rows[1][key]
        print(f"{key:<{width}}  {a * 1e3:>10.3f}ms  {b * 1e3:>10.3f}ms  {b / a:>6.2f}x")


if __name__ == "__main__":
    if "--single" in sys.argv:
        print(json.dumps(bench_active_path()))
    else:
        compare_paths()
