"""Synthetic minority oversampling by convex interpolation between neighbors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewSamples


@dataclass(frozen=True)
class InterpolationRecord:
    """Provenance of one synthetic sample: x_new = x_i + u * (x_j - x_i)."""
    i: int
    j: int
    u: float


@dataclass
class SmoteResult:
    samples: list[np.ndarray]             # originals followed by synthetics
    records: list[InterpolationRecord]    # one per synthetic sample


def smote_balance(minority: list[np.ndarray], target_count: int, k: int = 5,
                  seed: int = 0) -> SmoteResult:
    """Grow the minority set to exactly target_count samples.

    Each synthetic sample interpolates between a random minority sample and
    one of its k nearest minority neighbors (Euclidean), with u ~ U(0, 1).
    Deterministic under the seed; interpolation provenance is returned so
    every synthetic can be recomputed and verified.
    """
    n = len(minority)
    if n < 2:
        raise TooFewSamples(f"SMOTE needs at least 2 minority samples, got {n}")
    if k >= n:
        raise TooFewSamples(f"k={k} must be smaller than the minority size {n}")
    if target_count < n:
        raise ValueError(f"target_count {target_count} below minority size {n}")

    mat = np.stack([np.asarray(m, dtype=np.float64).reshape(-1) for m in minority])
    # pairwise distances; self excluded by masking the diagonal
    d2 = ((mat[:, None, :] - mat[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    neighbor_ids = np.argsort(d2, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(seed)
    samples = [mat[i].copy() for i in range(n)]
    records: list[InterpolationRecord] = []
    for _ in range(target_count - n):
        i = int(rng.integers(0, n))
        j = int(neighbor_ids[i][int(rng.integers(0, k))])
        u = float(rng.random())
        samples.append(mat[i] + u * (mat[j] - mat[i]))
        records.append(InterpolationRecord(i=i, j=j, u=u))
    return SmoteResult(samples=samples, records=records)


def jitter_augment(samples: list[np.ndarray], count: int, sigma: float,
                   rng: np.random.Generator) -> list[np.ndarray]:
    """Gaussian feature jitter: `count` noisy copies of cycled samples."""
    if not samples or count <= 0:
        return []
    out = []
    for t in range(count):
        base = samples[t % len(samples)]
        out.append(base + rng.normal(0.0, sigma, size=base.shape))
    return out
