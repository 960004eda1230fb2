"""Deterministic hashed embeddings.

Replaces a learned text embedder with something reproducible: stable
blake2b-based bucket hashing plus a fixed seeded random projection.
Identical inputs give identical vectors on every platform and run.
"""
from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

#: Salted probes per token; each lands in one bucket with a +/-1 value.
_TOKEN_PROBES = 4


def stable_hash(text: str) -> int:
    """64-bit hash that does not depend on PYTHONHASHSEED."""
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def bucket(text: str, dim: int) -> int:
    return stable_hash(text) % dim


@lru_cache(maxsize=64)
def projection_matrix(rows: int, dim: int, seed: int) -> np.ndarray:
    """Fixed seeded random projection, scaled to roughly preserve norms."""
    rng = np.random.default_rng(seed)
    mat = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(rows, dim))
    mat.setflags(write=False)
    return mat


def token_vector(token: str, dim: int) -> np.ndarray:
    """Unit-norm sparse hashed vector for one token (feature hashing)."""
    v = np.zeros(dim)
    for i in range(_TOKEN_PROBES):
        h = stable_hash(f"{token}#{i}")
        sign = 1.0 if (h >> 32) & 1 else -1.0
        v[h % dim] += sign
    norm = np.linalg.norm(v)
    if norm > 0:
        v /= norm
    return v


def embed_tokens(tokens: list[str], dim: int) -> np.ndarray:
    """Stack of token vectors, one row per token (T x dim)."""
    if not tokens:
        return np.zeros((0, dim))
    return np.stack([token_vector(t, dim) for t in tokens])
