"""Finite-difference validation of the analytic gradients.

Compares reverse-mode gradients of the single-example training loss against
central differences on up to 200 randomly sampled parameters. Dropout is
disabled (inference-mode forward) so repeat runs agree exactly.
"""
from __future__ import annotations

import numpy as np

from .params import ModelParams, TensorBundle
from .trainer import TrainingExample, bce_loss, classifier_forward, example_input


def _example_loss(params_like, dims, example: TrainingExample) -> float | object:
    x = example_input(example, params_like, dims, training=False)
    prob = classifier_forward(x, params_like.classifier)
    return bce_loss(prob, np.array(float(example.label)))


def grad_check(params: ModelParams, example: TrainingExample,
               epsilon: float = 1e-5, max_params: int = 200,
               seed: int = 0) -> float:
    """Max relative error between analytic and numeric gradients."""
    if not 1e-7 <= epsilon <= 1e-4:
        raise ValueError(f"epsilon {epsilon} outside [1e-7, 1e-4]")

    bundle = TensorBundle(params)
    loss = _example_loss(bundle, params.dims, example)
    loss.backward()
    grads = {name: (t.grad if t.grad is not None else np.zeros_like(t.data))
             for name, t in bundle.tensors.items()}

    arrays = dict(params.named_arrays())
    coords = [(name, i) for name, arr in arrays.items() for i in range(arr.size)]
    rng = np.random.default_rng(seed)
    if len(coords) > max_params:
        picks = rng.choice(len(coords), size=max_params, replace=False)
        coords = [coords[int(i)] for i in picks]

    worst = 0.0
    for name, flat_index in coords:
        arr = arrays[name].reshape(-1)
        original = arr[flat_index]
        arr[flat_index] = original + epsilon
        hi = _plain_loss(params, example)
        arr[flat_index] = original - epsilon
        lo = _plain_loss(params, example)
        arr[flat_index] = original
        numeric = (hi - lo) / (2.0 * epsilon)
        analytic = float(grads[name].reshape(-1)[flat_index])
        # Denominator floor 1e-6 sits well above the fp64 rounding noise of
        # the central difference (~|loss| * 2^-52 / epsilon ~ 1e-11), so
        # near-zero gradients are compared absolutely instead of drowning
        # the check in quantization error. A genuinely wrong formula still
        # fails loudly: its absolute error is orders above 1e-10.
        scale = max(abs(analytic), abs(numeric), 1e-6)
        worst = max(worst, abs(analytic - numeric) / scale)
    return worst


def _plain_loss(params: ModelParams, example: TrainingExample) -> float:
    """Same loss through the plain-ndarray forward path."""
    x = example_input(example, params, params.dims, training=False)
    prob = classifier_forward(x, params.classifier)
    return float(bce_loss(prob, np.array(float(example.label))))
