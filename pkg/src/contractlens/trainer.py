"""Training loop: binary cross-entropy over the fused modality features.

Forward pass: concatenate the three modality vectors, one fully connected
layer with ReLU, then a sigmoid head. Gradients flow by reverse-mode
accumulation through the classifier head and, for examples carrying raw
artifacts, through the AST projection, the comment conv/attention stack and
the graph encoder. The parameter snapshot with the lowest training loss is
kept and returned.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ast_features import project_ast_features
from .autodiff import (Tensor, clip, concat, data_of, dropout, log, mean, relu,
                       sigmoid, stack)
from .comments import comment_forward
from .errors import DegenerateLabels, EmptyDataset, TooFewSamples
from .graph_encoder import encode_graph
from .metrics import Metrics, evaluate_scores
from .node_embedding import OCfg
from .params import ModelDims, ModelParams, TensorBundle, init_params
from .smote import jitter_augment, smote_balance

_PROB_EPS = 1e-12


@dataclass
class TrainConfig:
    lr: float = 0.005
    epochs: int = 500
    dropout_p: float = 0.3
    split: float = 0.8
    decision_threshold: float = 0.95
    seed: int = 0
    smote_k: int = 5
    vuln: str | None = None
    balance: bool = True
    augment: bool = False
    augment_sigma: float = 0.01
    clf_hidden: int = 128
    encoder_lr: float | None = None  # two-phase override for encoder tensors

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if not 0.0 < self.split < 1.0:
            raise ValueError("split must be in (0, 1)")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision threshold must be in (0, 1)")


@dataclass
class TrainingExample:
    """One labeled contract: direct modality vectors, raw artifacts, or a mix.

    Raw fields take precedence over the matching vector; a raw field makes
    that leg differentiable during training.
    """
    name: str
    label: bool
    f_cfg: np.ndarray | None = None
    f_ast: np.ndarray | None = None
    f_com: np.ndarray | None = None
    ocfg: OCfg | None = None
    ast_raw: np.ndarray | None = None
    tokens: list[str] | None = None

    @property
    def vector_only(self) -> bool:
        return (self.ocfg is None and self.ast_raw is None and self.tokens is None
                and self.f_cfg is not None and self.f_ast is not None
                and self.f_com is not None)

    def flattened(self) -> np.ndarray:
        return np.concatenate([self.f_cfg, self.f_ast, self.f_com])


@dataclass
class EpochStats:
    epoch: int
    loss: float
    metrics: Metrics


@dataclass
class TrainResult:
    params: ModelParams          # checkpoint with the lowest training loss
    history: list[EpochStats]
    best_epoch: int
    best_loss: float
    final_loss: float
    test_metrics: Metrics | None

    def history_csv(self) -> str:
        lines = ["epoch,loss,acc,re,pre,f1"]
        for h in self.history:
            lines.append(f"{h.epoch},{h.loss!r},{h.metrics.as_csv_fields()}")
        return "\n".join(lines) + "\n"


def classifier_forward(x, clf, dropout_p: float = 0.0,
                       rng: np.random.Generator | None = None,
                       training: bool = False):
    """Fused features -> probability. x is (n, clf_in) or (clf_in,)."""
    w1 = clf.w1
    h = relu(x @ w1.T + clf.b1)
    h = dropout(h, dropout_p, rng, training)
    return sigmoid(h @ clf.w2 + clf.b2)


def example_input(example: TrainingExample, params, dims: ModelDims,
                  training: bool = False, rng: np.random.Generator | None = None):
    """Concatenated modality vector for one example (Tensor-aware)."""
    if example.ocfg is not None:
        f_cfg = encode_graph(example.ocfg, params.encoder, training, rng)
    else:
        f_cfg = example.f_cfg
    if example.ast_raw is not None:
        f_ast = project_ast_features(example.ast_raw, params.ast)
    else:
        f_ast = example.f_ast
    if example.tokens is not None:
        if example.tokens:
            _, _, f_com = comment_forward(example.tokens, params.comments,
                                          dims.comment_embed)
        else:
            f_com = np.zeros(dims.out)
    else:
        f_com = example.f_com
    for leg, v in (("cfg", f_cfg), ("ast", f_ast), ("com", f_com)):
        if v is None:
            raise ValueError(f"example {example.name} provides no {leg} input")
    return concat([f_cfg, f_ast, f_com])


def bce_loss(probs, labels):
    """Mean binary cross-entropy with probability clamping at 1e-12."""
    p = clip(probs, _PROB_EPS, 1.0 - _PROB_EPS)
    y = np.asarray(labels, dtype=np.float64)
    terms = y * log(p) + (1.0 - y) * log(1.0 - p)
    return -mean(terms)


class Adam:
    """Adaptive-moment optimizer over named tensors, with an optional
    separate learning rate for encoder tensors (two-phase override)."""

    def __init__(self, tensors: dict[str, Tensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 encoder_lr: float | None = None):
        self.tensors = tensors
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.encoder_lr = encoder_lr
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self):
        self.t += 1
        for name, tensor in self.tensors.items():
            g = tensor.grad
            if g is None:
                continue
            m = self._m.setdefault(name, np.zeros_like(tensor.data))
            v = self._v.setdefault(name, np.zeros_like(tensor.data))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * (g * g)
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            lr = self.lr
            if self.encoder_lr is not None and name.startswith("encoder."):
                lr = self.encoder_lr
            tensor.data -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _split_dataset(dataset, config, rng):
    order = rng.permutation(len(dataset))
    cut = int(round(len(dataset) * config.split))
    cut = max(1, min(cut, len(dataset)))
    train = [dataset[i] for i in order[:cut]]
    test = [dataset[i] for i in order[cut:]]
    return train, test


def _balance(train_set, config, rng):
    """SMOTE the minority class up to the majority count (vector examples)."""
    pos = [e for e in train_set if e.label]
    neg = [e for e in train_set if not e.label]
    minority, majority = (pos, neg) if len(pos) < len(neg) else (neg, pos)
    if len(minority) == len(majority) or not minority:
        return list(train_set)
    if not all(e.vector_only for e in minority):
        raise TooFewSamples(
            "balancing interpolates flattened feature vectors; minority "
            "examples carrying raw artifacts cannot be interpolated")
    label = minority[0].label
    dim = len(minority[0].f_cfg)
    vectors = [e.flattened() for e in minority]
    extra = []
    if config.augment:
        seed = int(rng.integers(0, 2**32))
        jit = jitter_augment(vectors, len(vectors), config.augment_sigma,
                             np.random.default_rng(seed))
        extra = [_vector_example(f"augment-{i}", label, v, dim) for i, v in enumerate(jit)]
    target = len(majority) - len(extra)
    if target > len(vectors):
        k = min(config.smote_k, len(vectors) - 1)
        if k < 1:
            raise TooFewSamples("minority class too small to interpolate")
        seed = int(rng.integers(0, 2**32))
        result = smote_balance(vectors, target, k=k, seed=seed)
        synth = result.samples[len(vectors):]
        extra += [_vector_example(f"smote-{i}", label, v, dim) for i, v in enumerate(synth)]
    return list(train_set) + extra


def _vector_example(name, label, flat, dim):
    return TrainingExample(name=name, label=label, f_cfg=flat[:dim],
                           f_ast=flat[dim:2 * dim], f_com=flat[2 * dim:])


def train(dataset: list[TrainingExample], config: TrainConfig,
          params: ModelParams | None = None,
          dims: ModelDims | None = None) -> TrainResult:
    """Train on an 80/20 split with best-loss checkpointing.

    Deterministic for a fixed config seed: the split, SMOTE draws, dropout
    masks and parameter trajectory all derive from it.
    """
    if not dataset:
        raise EmptyDataset("no training examples")
    rng = np.random.default_rng(config.seed)

    train_set, test_set = _split_dataset(dataset, config, rng)
    labels_seen = {e.label for e in train_set}
    if len(labels_seen) < 2:
        raise DegenerateLabels("training split contains a single class")
    if config.balance:
        train_set = _balance(train_set, config, rng)

    if dims is None:
        if params is not None:
            dims = params.dims
        else:
            with_vec = next((e for e in dataset if e.f_cfg is not None), None)
            if with_vec is None:
                raise ValueError("pass dims= when no example carries direct vectors")
            dims = ModelDims(out=len(with_vec.f_cfg), clf_hidden=config.clf_hidden,
                             dropout_p=config.dropout_p)
    if params is None:
        params = init_params(dims, seed=config.seed)
    params.vuln = config.vuln

    bundle = TensorBundle(params)
    optimizer = Adam(bundle.tensors, lr=config.lr, encoder_lr=config.encoder_lr)
    labels = np.array([e.label for e in train_set], dtype=np.float64)
    vector_batch = all(e.vector_only for e in train_set)
    if vector_batch:
        x_batch = np.stack([e.flattened() for e in train_set])

    history: list[EpochStats] = []
    best_loss = np.inf
    best_epoch = -1
    best_snapshot: ModelParams | None = None

    for epoch in range(config.epochs):
        if vector_batch:
            x = x_batch
        else:
            x = stack([example_input(e, bundle, dims, training=True, rng=rng)
                       for e in train_set])
        probs = classifier_forward(x, bundle.classifier, config.dropout_p,
                                   rng, training=True)
        loss = bce_loss(probs, labels)
        loss_value = float(data_of(loss))
        if not np.isfinite(loss_value):
            raise FloatingPointError(f"non-finite loss at epoch {epoch}")

        stats = evaluate_scores(data_of(probs), labels.astype(bool),
                                config.decision_threshold)
        history.append(EpochStats(epoch=epoch, loss=loss_value, metrics=stats))
        if loss_value < best_loss:
            best_loss = loss_value
            best_epoch = epoch
            best_snapshot = params.copy()

        loss.backward()
        optimizer.step()
        bundle.zero_grads()

    assert best_snapshot is not None
    best_snapshot.vuln = config.vuln
    test_metrics = None
    if test_set:
        test_metrics = evaluate(best_snapshot, test_set, config.decision_threshold)
    return TrainResult(params=best_snapshot, history=history, best_epoch=best_epoch,
                       best_loss=best_loss, final_loss=history[-1].loss,
                       test_metrics=test_metrics)


def predict_probability(params: ModelParams, example: TrainingExample) -> float:
    """Inference probability for one example; deterministic, no dropout."""
    x = example_input(example, params, params.dims, training=False)
    return float(data_of(classifier_forward(x, params.classifier)))


def evaluate(params: ModelParams, test_set: list[TrainingExample],
             threshold: float) -> Metrics:
    """Confusion metrics + rank AUC with prediction = (probability > threshold)."""
    if not test_set:
        raise EmptyDataset("empty test set")
    scores = np.array([predict_probability(params, e) for e in test_set])
    labels = np.array([e.label for e in test_set], dtype=bool)
    return evaluate_scores(scores, labels, threshold)
