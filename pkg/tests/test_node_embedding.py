"""Node embedding tests with an independent straight-line reconstruction."""
import hashlib

import numpy as np
import pytest

from contractlens.cfg import build_cfg, segment_blocks
from contractlens.disasm import decode
from contractlens.errors import DimensionMismatch
from contractlens.node_embedding import (CATEGORY_ORDER, assemble_ocfg, embed_block,
                                         embed_blocks)

from helpers import asm


def reference_embedding(mnemonics, categories, dim, seed):
    """Second implementation: category histogram projection + bigram buckets."""
    hist = np.zeros(11)
    order = {cat: i for i, cat in enumerate(CATEGORY_ORDER)}
    for cat in categories:
        hist[order[cat]] += 1
    rng = np.random.default_rng(seed)
    proj = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(11, dim))
    vec = hist @ proj
    for a, b in zip(mnemonics, mnemonics[1:]):
        digest = hashlib.blake2b(f"{a}|{b}".encode(), digest_size=8).digest()
        vec[int.from_bytes(digest, "little") % dim] += 1.0
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def test_push_push_add_matches_reference():
    code = asm("PUSH1 0x01", "PUSH1 0x02", "ADD")
    block = segment_blocks(decode(code))[0]
    got = embed_block(block, dim=32, seed=42)
    expected = reference_embedding(
        ["PUSH1", "PUSH1", "ADD"],
        [i.opcode.category for i in block.instructions], 32, 42)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_identical_blocks_identical_rows():
    code = asm("JUMPDEST", "PUSH1 0x01", "POP", "STOP",
               "JUMPDEST", "PUSH1 0x01", "POP", "STOP")
    blocks = segment_blocks(decode(code))
    assert len(blocks) == 2
    a = embed_block(blocks[0], dim=64)
    b = embed_block(blocks[1], dim=64)
    np.testing.assert_array_equal(a, b)


def test_unit_norm():
    code = asm("PUSH1 0x01", "PUSH1 0x02", "ADD", "STOP")
    block = segment_blocks(decode(code))[0]
    for dim in (16, 64, 128):
        v = embed_block(block, dim=dim)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-9


def test_dim_floor():
    block = segment_blocks(decode(asm("STOP")))[0]
    with pytest.raises(ValueError):
        embed_block(block, dim=8)


def test_cross_block_permutation_changes_embeddings():
    # Swapping instructions between blocks with different opcode mixes must
    # move at least one of the two embeddings. Statistical check over many
    # random block pairs.
    rng = np.random.default_rng(99)
    pool = ["ADD", "MUL", "CALLER", "TIMESTAMP", "POP", "MLOAD", "SLOAD",
            "ISZERO", "KECCAK256", "GAS", "DUP1", "SWAP1", "LOG0"]
    changed = 0
    trials = 0
    for _ in range(200):
        a_ops = [pool[i] for i in rng.integers(0, len(pool), size=5)]
        b_ops = [pool[i] for i in rng.integers(0, len(pool), size=5)]
        ai, bi = int(rng.integers(0, 5)), int(rng.integers(0, 5))
        if a_ops[ai] == b_ops[bi]:
            continue  # swap is a no-op on the multisets
        trials += 1
        def emb(ops):
            code = asm(*ops, "STOP")
            return embed_block(segment_blocks(decode(code))[0], dim=64)
        before = (emb(a_ops), emb(b_ops))
        a_ops[ai], b_ops[bi] = b_ops[bi], a_ops[ai]
        after = (emb(a_ops), emb(b_ops))
        if (not np.array_equal(before[0], after[0])
                or not np.array_equal(before[1], after[1])):
            changed += 1
    assert trials > 100
    assert changed == trials  # every real swap moved an embedding


def test_embed_blocks_shape_and_order():
    code = asm("PUSH1 0x03", "JUMP", "JUMPDEST", "STOP")
    g = build_cfg(code)
    nf = embed_blocks(g, dim=32)
    assert nf.shape == (2, 32)
    np.testing.assert_array_equal(nf[0], embed_block(g.blocks[0], dim=32))


def test_assemble_ocfg_bundles_and_validates():
    g = build_cfg(asm("PUSH1 0x03", "JUMP", "JUMPDEST", "STOP"), "Vault.sol")
    nf = embed_blocks(g, dim=32)
    ocfg = assemble_ocfg(g, nf)
    assert ocfg.contract_name == "Vault.sol"
    assert ocfg.node_features is nf
    with pytest.raises(DimensionMismatch):
        assemble_ocfg(g, nf[:1])
