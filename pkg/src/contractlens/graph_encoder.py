"""Graph encoder: one graph-convolution layer, a three-layer GRU stack over
the node sequence, then fully connected and output heads.

Pipeline: H1 = ReLU(A_hat X W1) -> dropout -> GRU x3 over rows (block order,
ascending start offset) -> dropout -> mean pool -> ReLU(fc) -> affine out.

All functions accept plain ndarrays (inference) or autodiff Tensors
(training); the same code path serves both.
"""
from __future__ import annotations

import numpy as np

from .autodiff import data_of, dropout, mean, relu, sigmoid, stack, tanh
from .cfg import ControlFlowGraph
from .errors import DimensionMismatch
from .node_embedding import OCfg


def normalized_adjacency(cfg: ControlFlowGraph) -> np.ndarray:
    """Symmetrically normalized adjacency with self-loops.

    A gets a 1 for every edge regardless of kind, is symmetrized with
    max(A, A^T), and A_hat = D^-1/2 (A + I) D^-1/2 with D the degree of A+I.
    """
    n = len(cfg.blocks)
    if n < 1:
        raise ValueError("cannot normalize an empty graph")
    index = {b.id: i for i, b in enumerate(cfg.blocks)}
    a = np.zeros((n, n))
    for src, _, dst in cfg.edges:
        a[index[src], index[dst]] = 1.0
    a = np.maximum(a, a.T)
    a_tilde = a + np.eye(n)
    d_inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return d_inv_sqrt[:, None] * a_tilde * d_inv_sqrt[None, :]


def gcn_layer(x, adj, w1):
    """H1 = ReLU(adj @ x @ w1); w1 is (d_input, d_output)."""
    if data_of(x).shape[1] != data_of(w1).shape[0]:
        raise DimensionMismatch(
            f"node features {data_of(x).shape} vs gcn weight {data_of(w1).shape}")
    if data_of(adj).shape[0] != data_of(x).shape[0]:
        raise DimensionMismatch(
            f"adjacency {data_of(adj).shape} vs node features {data_of(x).shape}")
    return relu(adj @ x @ w1)


def gru_step(x_t, h_prev, layer):
    """One gated-recurrent step.

    z = sigmoid(Wz x + Uz h);  r = sigmoid(Wr x + Ur h)
    h_cand = tanh(W x + r * (U h));  h = (1 - z) * h_prev + z * h_cand
    """
    z = sigmoid(layer.wz @ x_t + layer.uz @ h_prev)
    r = sigmoid(layer.wr @ x_t + layer.ur @ h_prev)
    h_cand = tanh(layer.w @ x_t + r * (layer.u @ h_prev))
    return (1.0 - z) * h_prev + z * h_cand


def gru_sequence(rows, layer):
    """Run one GRU layer over the node sequence; returns stacked hidden states."""
    n, hidden = data_of(rows).shape
    h = np.zeros(hidden)
    outs = []
    for t in range(n):
        h = gru_step(rows[t], h, layer)
        outs.append(h)
    return stack(outs)


def encode_features(node_features, adj, params, training: bool = False,
                    rng: np.random.Generator | None = None):
    """Full encoder forward pass over a node feature matrix."""
    h = gcn_layer(node_features, adj, params.w1)
    h = dropout(h, params.dropout_p, rng, training)
    for layer in params.layers:
        h = gru_sequence(h, layer)
    h = dropout(h, params.dropout_p, rng, training)
    pooled = mean(h, axis=0)
    fc = relu(params.fc_w @ pooled + params.fc_b)
    return params.out_w @ fc + params.out_b


def encode_graph(ocfg: OCfg, params, training: bool = False,
                 rng: np.random.Generator | None = None):
    """Control-flow feature vector for one contract.

    Deterministic at inference (training=False); dropout is active only
    while training.
    """
    adj = normalized_adjacency(ocfg.cfg)
    out = encode_features(ocfg.node_features, adj, params, training, rng)
    if not np.all(np.isfinite(data_of(out))):
        raise ValueError("encoder produced non-finite output")
    return out
