"""Seeded bootstrap percentile confidence intervals.

Seed protocol (fixed so independent reimplementations reproduce bit-exact
intervals): indices come from numpy's PCG64 generator seeded with `seed`,
drawn as integers(0, n, size=(n_resamples, n)); resample means are sorted and
the bounds linearly interpolated at positions q*(B-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tcmflow import kernels


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class CiResult:
    mean: float
    lower: float
    upper: float
    level: float
    n_resamples: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "lower": self.lower, "upper": self.upper,
                "level": self.level, "n_resamples": self.n_resamples}


def _interpolated(sorted_values: np.ndarray, q: float) -> float:
    pos = q * (len(sorted_values) - 1)
    lo = int(pos)
    frac = pos - lo
    if lo + 1 >= len(sorted_values):
        return float(sorted_values[-1])
    return float(sorted_values[lo] + (sorted_values[lo + 1] - sorted_values[lo]) * frac)


def confidence_interval(
    indicators: Sequence[float],
    level: float = 0.95,
    seed: int = 0,
    n_resamples: int = 10_000,
) -> CiResult:
    values = np.asarray(indicators, dtype=np.float64)
    if values.size < 2:
        raise InsufficientData("need at least 2 indicators")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    n = values.size
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, n, size=(n_resamples, n), dtype=np.int64)
    means = np.sort(kernels.resample_sums(values, idx) / n)
    alpha = (1.0 - level) / 2.0
    return CiResult(
        mean=float(values.sum() / n),
        lower=_interpolated(means, alpha),
        upper=_interpolated(means, 1.0 - alpha),
        level=level,
        n_resamples=n_resamples,
    )
