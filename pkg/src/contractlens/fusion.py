"""Modality fusion and the RBF-times-cosine similarity used for clone search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

#: Default RBF width: inverse of the flattened feature dimension (3 x 512).
DEFAULT_GAMMA = 1.0 / 1536.0
DEFAULT_CLONE_THRESHOLD = 0.95


@dataclass
class ContractFeatures:
    """Stacked modality features for one contract; row order cfg, ast, com."""
    contract_name: str
    f_cfg: np.ndarray
    f_ast: np.ndarray
    f_com: np.ndarray
    flags: set[str] = field(default_factory=set)

    @property
    def F(self) -> np.ndarray:
        return np.vstack([self.f_cfg, self.f_ast, self.f_com])

    def flattened(self) -> np.ndarray:
        return self.F.reshape(-1)


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    cosine: float
    rbf: float


def fuse(f_cfg, f_ast, f_com, contract_name: str = "contract.sol",
         flags: set[str] | None = None) -> ContractFeatures:
    """Stack three equal-length modality vectors into one feature record."""
    vecs = [np.asarray(v, dtype=np.float64) for v in (f_cfg, f_ast, f_com)]
    lengths = {v.shape for v in vecs}
    if len(lengths) != 1 or vecs[0].ndim != 1:
        raise DimensionMismatch(
            f"modality vectors disagree: {[v.shape for v in vecs]}")
    for name, v in zip(("cfg", "ast", "com"), vecs):
        if not np.all(np.isfinite(v)):
            raise ValueError(f"f_{name} contains non-finite entries")
    return ContractFeatures(contract_name=contract_name, f_cfg=vecs[0],
                            f_ast=vecs[1], f_com=vecs[2],
                            flags=set(flags) if flags else set())


def similarity(a: ContractFeatures, b: ContractFeatures,
               gamma: float = DEFAULT_GAMMA) -> SimilarityScore:
    """cosine(x, y) * exp(-gamma * ||x - y||^2) over the flattened stacks."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = a.flattened()
    y = b.flattened()
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    cosine = 0.0 if nx == 0.0 or ny == 0.0 else float(np.dot(x, y) / (nx * ny))
    diff = x - y
    rbf = float(np.exp(-gamma * np.dot(diff, diff)))
    return SimilarityScore(value=cosine * rbf, cosine=cosine, rbf=rbf)


def rank_clones(query: ContractFeatures, store, threshold: float,
                gamma: float = DEFAULT_GAMMA) -> list[tuple[str, SimilarityScore]]:
    """All store entries scoring >= threshold, best first.

    ``store`` is anything with a ``scan()`` yielding records that expose
    ``contract_name`` and ``features`` (or are ContractFeatures themselves).
    Ties break by ascending contract name so output is deterministic.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    results = []
    for record in store.scan():
        feats = getattr(record, "features", record)
        score = similarity(query, feats, gamma)
        if score.value >= threshold:
            results.append((feats.contract_name, score))
    results.sort(key=lambda item: (-item[1].value, item[0]))
    return results
