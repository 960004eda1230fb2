"""Per-block node feature vectors and the bundled control-flow record.

Each basic block is embedded deterministically as the L2-normalized sum of
(a) its 11-bin opcode-category histogram pushed through a fixed seeded
random projection and (b) hashed mnemonic-bigram counts bucketed into the
same dimension. No learned weights, no vocabulary files.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cfg import BasicBlock, ControlFlowGraph
from .errors import DimensionMismatch
from .hashing import bucket, projection_matrix
from .opcodes import Category

DEFAULT_DIM = 128
DEFAULT_SEED = 42

#: Fixed category order for the histogram bins.
CATEGORY_ORDER = list(Category)
_CATEGORY_INDEX = {cat: i for i, cat in enumerate(CATEGORY_ORDER)}


def embed_block(block: BasicBlock, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Deterministic fixed-length vector for one block (dim >= 16)."""
    if dim < 16:
        raise ValueError(f"embedding dim must be >= 16, got {dim}")
    if not block.instructions:
        return np.zeros(dim)

    hist = np.zeros(len(CATEGORY_ORDER))
    for ins in block.instructions:
        hist[_CATEGORY_INDEX[ins.opcode.category]] += 1.0
    vec = hist @ projection_matrix(len(CATEGORY_ORDER), dim, seed)

    mnemonics = [ins.opcode.mnemonic for ins in block.instructions]
    for a, b in zip(mnemonics, mnemonics[1:]):
        vec[bucket(f"{a}|{b}", dim)] += 1.0

    norm = np.linalg.norm(vec)
    if norm > 0:
        vec = vec / norm
    return vec


def embed_blocks(cfg: ControlFlowGraph, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Node feature matrix: one row per block, in block order."""
    if not cfg.blocks:
        return np.zeros((0, dim))
    return np.stack([embed_block(b, dim, seed) for b in cfg.blocks])


@dataclass
class OCfg:
    """Control-flow record: graph, node features, contract name."""
    cfg: ControlFlowGraph
    node_features: np.ndarray  # N x dim
    contract_name: str


def assemble_ocfg(cfg: ControlFlowGraph, node_features: np.ndarray) -> OCfg:
    """Bundle a graph with its node feature matrix; shapes must agree."""
    if node_features.ndim != 2 or node_features.shape[0] != len(cfg.blocks):
        raise DimensionMismatch(
            f"{len(cfg.blocks)} blocks but feature matrix of shape {node_features.shape}")
    if not np.all(np.isfinite(node_features)):
        raise ValueError("node features must be finite")
    return OCfg(cfg=cfg, node_features=node_features, contract_name=cfg.contract_name)
