"""Encoder tests against independent straight-line oracles.

The oracles below re-evaluate the math with explicit loops and scalar
formulas; they never call the implementation under test.
"""
import math

import numpy as np
import pytest

from contractlens.cfg import BasicBlock, ControlFlowGraph, EdgeKind, build_cfg
from contractlens.errors import DimensionMismatch
from contractlens.graph_encoder import (encode_graph, gcn_layer, gru_step,
                                        normalized_adjacency)
from contractlens.node_embedding import assemble_ocfg
from contractlens.params import EncoderParams, GruLayerParams

from helpers import asm


# -- oracles ---------------------------------------------------------------

def loop_matmul(a, b):
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            for t in range(k):
                out[i, j] += a[i, t] * b[t, j]
    return out


def gcn_oracle(x, adj, w1):
    h = loop_matmul(loop_matmul(adj, x), w1)
    return np.where(h > 0, h, 0.0)


def gru_oracle(x, h_prev, layer):
    """Vector GRU evaluated entry by entry; returns (z, r, h_cand, h)."""
    def mv(m, v):
        return np.array([sum(m[i, j] * v[j] for j in range(len(v)))
                         for i in range(m.shape[0])])
    sig = lambda a: 1.0 / (1.0 + np.exp(-a))
    z = sig(mv(layer.wz, x) + mv(layer.uz, h_prev))
    r = sig(mv(layer.wr, x) + mv(layer.ur, h_prev))
    h_cand = np.tanh(mv(layer.w, x) + r * mv(layer.u, h_prev))
    h = (1 - z) * h_prev + z * h_cand
    return z, r, h_cand, h


def encoder_oracle(nf, adj, p):
    h = gcn_oracle(nf, adj, p.w1)
    for layer in p.layers:
        prev = np.zeros(h.shape[1])
        rows = []
        for t in range(h.shape[0]):
            _, _, _, prev = gru_oracle(h[t], prev, layer)
            rows.append(prev)
        h = np.stack(rows)
    pooled = h.mean(axis=0)
    fc = np.maximum(p.fc_w @ pooled + p.fc_b, 0.0)
    return p.out_w @ fc + p.out_b


def random_layer(rng, hidden):
    return GruLayerParams(*(rng.normal(size=(hidden, hidden)) * 0.6 for _ in range(6)))


def random_params(rng, d_in, hidden, fc, out, dropout_p=0.0):
    return EncoderParams(
        w1=rng.normal(size=(d_in, hidden)),
        layers=[random_layer(rng, hidden) for _ in range(3)],
        fc_w=rng.normal(size=(fc, hidden)), fc_b=rng.normal(size=fc),
        out_w=rng.normal(size=(out, fc)), out_b=rng.normal(size=out),
        dropout_p=dropout_p,
    )


def random_graph(rng, n_blocks):
    blocks = [BasicBlock(id=i, start_offset=i * 2, end_offset=i * 2 + 2,
                         instructions=(), is_jumpdest_entry=False)
              for i in range(n_blocks)]
    edges = set()
    for _ in range(int(rng.integers(0, n_blocks * 2 + 1))):
        s, t = rng.integers(0, n_blocks, size=2)
        edges.add((int(s), EdgeKind.Unconditional, int(t)))
    return ControlFlowGraph(blocks=blocks, edges=edges, contract_name="r.sol")


# -- normalized adjacency ----------------------------------------------------

def test_single_node_no_edges():
    g = build_cfg(asm("STOP"))
    np.testing.assert_array_equal(normalized_adjacency(g), [[1.0]])


def test_two_nodes_one_edge_hand_computed():
    g = build_cfg(asm("ADD", "JUMPDEST", "STOP"))  # fall-through edge 0 -> 1
    a_hat = normalized_adjacency(g)
    # A symmetrized = [[0,1],[1,0]], A+I all ones, degrees (2,2) -> every
    # entry 1/sqrt(2) * 1 * 1/sqrt(2) = 1/2
    np.testing.assert_allclose(a_hat, np.full((2, 2), 0.5), atol=1e-15)


def test_identity_rows_sum_to_one_without_edges():
    for n in (1, 3, 7):
        blocks = [BasicBlock(i, i, i + 1, (), False) for i in range(n)]
        g = ControlFlowGraph(blocks=blocks, edges=set(), contract_name="x.sol")
        a_hat = normalized_adjacency(g)
        np.testing.assert_allclose(a_hat.sum(axis=1), np.ones(n), atol=1e-15)


def test_adjacency_symmetric_and_oracle_checked():
    rng = np.random.default_rng(5)
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(1, 8)))
        a_hat = normalized_adjacency(g)
        np.testing.assert_allclose(a_hat, a_hat.T, atol=1e-15)
        # independent recomputation
        n = len(g.blocks)
        a = np.zeros((n, n))
        for s, _, t in g.edges:
            a[s, t] = 1
        a = np.maximum(a, a.T) + np.eye(n)
        d = np.diag(1 / np.sqrt(a.sum(axis=1)))
        np.testing.assert_allclose(a_hat, d @ a @ d, atol=1e-12)


# -- gcn layer ---------------------------------------------------------------

def test_gcn_zero_weights():
    rng = np.random.default_rng(0)
    x, adj = rng.normal(size=(3, 4)), np.eye(3)
    np.testing.assert_array_equal(gcn_layer(x, adj, np.zeros((4, 2))), np.zeros((3, 2)))


def test_gcn_single_node_identity():
    x = np.array([[-1.0, 2.0, 0.5]])
    out = gcn_layer(x, np.array([[1.0]]), np.eye(3))
    np.testing.assert_array_equal(out, [[0.0, 2.0, 0.5]])


def test_gcn_matches_loop_oracle():
    rng = np.random.default_rng(42)
    for _ in range(10):
        x = rng.normal(size=(4, 5))
        adj = rng.normal(size=(4, 4))
        w1 = rng.normal(size=(5, 3))
        np.testing.assert_allclose(gcn_layer(x, adj, w1), gcn_oracle(x, adj, w1),
                                   atol=1e-10)
        assert np.all(gcn_layer(x, adj, w1) >= 0)


def test_gcn_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        gcn_layer(np.zeros((3, 4)), np.eye(3), np.zeros((5, 2)))
    with pytest.raises(DimensionMismatch):
        gcn_layer(np.zeros((3, 4)), np.eye(2), np.zeros((4, 2)))


# -- gru step ----------------------------------------------------------------

def test_gru_all_zero_weights():
    layer = GruLayerParams(*(np.zeros((3, 3)) for _ in range(6)))
    h = gru_step(np.ones(3), np.zeros(3), layer)
    np.testing.assert_array_equal(h, np.zeros(3))


def test_gru_update_gate_forced_to_one():
    # huge Wz drives z to exactly 1.0 in float64, so h == h_cand bit for bit
    hidden = 3
    layer = GruLayerParams(
        wz=np.full((hidden, hidden), 100.0), uz=np.zeros((hidden, hidden)),
        wr=np.zeros((hidden, hidden)), ur=np.zeros((hidden, hidden)),
        w=np.eye(hidden) * 0.3, u=np.zeros((hidden, hidden)))
    x = np.ones(hidden)
    h_prev = np.array([5.0, -7.0, 2.0])
    h = gru_step(x, h_prev, layer)
    np.testing.assert_array_equal(h, np.tanh(0.3 * x))


def test_gru_scalar_formula_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        wz, uz, wr, ur, w, u, x, hp = rng.normal(size=8) * 2
        layer = GruLayerParams(*(np.array([[v]]) for v in (wz, uz, wr, ur, w, u)))
        got = gru_step(np.array([x]), np.array([hp]), layer)[0]
        z = 1 / (1 + math.exp(-(wz * x + uz * hp)))
        r = 1 / (1 + math.exp(-(wr * x + ur * hp)))
        h_cand = math.tanh(w * x + r * (u * hp))
        expected = (1 - z) * hp + z * h_cand
        assert abs(got - expected) < 1e-12


def test_gru_gate_ranges_and_convexity():
    rng = np.random.default_rng(17)
    for _ in range(100):
        hidden = int(rng.integers(1, 6))
        layer = random_layer(rng, hidden)
        x = rng.normal(size=hidden)
        h_prev = rng.normal(size=hidden)
        z, r, h_cand, h = gru_oracle(x, h_prev, layer)
        got = gru_step(x, h_prev, layer)
        np.testing.assert_allclose(got, h, atol=1e-12)
        assert np.all((z > 0) & (z < 1))
        assert np.all((r > 0) & (r < 1))
        assert np.all((h_cand > -1) & (h_cand < 1))
        lo = np.minimum(h_prev, h_cand) - 1e-12
        hi = np.maximum(h_prev, h_cand) + 1e-12
        assert np.all((got >= lo) & (got <= hi))


# -- full encoder -------------------------------------------------------------

def fixture_ocfg(dim=4, seed=0):
    # tiny-dimension fixture: real 2-block graph, random node features
    code = asm("PUSH1 0x03", "JUMP", "JUMPDEST", "STOP")
    g = build_cfg(code, "fix.sol")
    nf = np.random.default_rng(seed).normal(size=(len(g.blocks), dim))
    return assemble_ocfg(g, nf)


def test_zero_params_output_is_out_bias():
    rng = np.random.default_rng(8)
    ocfg = fixture_ocfg()
    p = EncoderParams(
        w1=np.zeros((4, 4)),
        layers=[GruLayerParams(*(np.zeros((4, 4)) for _ in range(6))) for _ in range(3)],
        fc_w=np.zeros((4, 4)), fc_b=np.zeros(4),
        out_w=np.zeros((4, 4)), out_b=rng.normal(size=4))
    np.testing.assert_array_equal(encode_graph(ocfg, p), p.out_b)


def test_inference_deterministic():
    rng = np.random.default_rng(9)
    ocfg = fixture_ocfg()
    p = random_params(rng, 4, 4, 4, 4, dropout_p=0.5)
    a = encode_graph(ocfg, p, training=False)
    b = encode_graph(ocfg, p, training=False)
    np.testing.assert_array_equal(a, b)


def test_end_to_end_matches_composed_oracle():
    rng = np.random.default_rng(123)
    for _ in range(25):
        ocfg = fixture_ocfg()
        nf = rng.normal(size=(2, 4))
        ocfg.node_features = nf
        p = random_params(rng, 4, 4, 4, 4)
        got = encode_graph(ocfg, p)
        adj = normalized_adjacency(ocfg.cfg)
        np.testing.assert_allclose(got, encoder_oracle(nf, adj, p), atol=1e-9)


def test_block_id_relabeling_invariance():
    rng = np.random.default_rng(31)
    code = asm("PUSH1 0x01", "PUSH1 0x08", "JUMPI", "PUSH1 0x00", "STOP",
               "JUMPDEST", "STOP")
    g = build_cfg(code, "a.sol")
    p = random_params(rng, 4, 4, 4, 4)
    nf = rng.normal(size=(len(g.blocks), 4))
    base = encode_graph(assemble_ocfg(g, nf), p)

    # same blocks in the same offset order, ids shifted by 10
    shifted_blocks = [BasicBlock(b.id + 10, b.start_offset, b.end_offset,
                                 b.instructions, b.is_jumpdest_entry)
                      for b in g.blocks]
    shifted_edges = {(s + 10, k, t + 10) for s, k, t in g.edges}
    g2 = ControlFlowGraph(blocks=shifted_blocks, edges=shifted_edges,
                          contract_name="a.sol")
    relabeled = encode_graph(assemble_ocfg(g2, nf), p)
    np.testing.assert_array_equal(base, relabeled)


def test_training_dropout_needs_rng_and_differs():
    rng = np.random.default_rng(77)
    ocfg = fixture_ocfg()
    p = random_params(rng, 4, 4, 4, 4, dropout_p=0.5)
    out1 = encode_graph(ocfg, p, training=True, rng=np.random.default_rng(1))
    out2 = encode_graph(ocfg, p, training=True, rng=np.random.default_rng(2))
    assert not np.array_equal(out1, out2)
    # same rng seed -> same masks -> same output
    out3 = encode_graph(ocfg, p, training=True, rng=np.random.default_rng(1))
    np.testing.assert_array_equal(out1, out3)
