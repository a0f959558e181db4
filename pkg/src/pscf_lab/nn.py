"""From-scratch feed-forward network with reverse-mode gradients and Adam.

The model is a ReLU MLP whose softmax output is always a valid lottery. The
default architecture has an m*m input, five hidden layers of 120 units, and
an m-way output. All arithmetic is 64-bit; training trajectories are a pure
function of (seed, data, config), which the checkpoint round-trip preserves
bit for bit via shortest-representation decimal serialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DimensionError, FormatError, StateError

CHECKPOINT_FORMAT = "pscf-mlp-v1"

DEFAULT_HIDDEN_WIDTH = 120
DEFAULT_HIDDEN_LAYERS = 5


@dataclass
class MlpModel:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]  # per layer, shaped (fan_in, fan_out)
    biases: list[np.ndarray]
    meta: dict = field(default_factory=dict)

    @property
    def num_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list in a fixed order (weights then bias per layer)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def init_model(
    m: int,
    seed: int,
    hidden_width: int = DEFAULT_HIDDEN_WIDTH,
    hidden_layers: int = DEFAULT_HIDDEN_LAYERS,
    meta: Optional[dict] = None,
) -> MlpModel:
    """He-uniform weights, zero biases; deterministic for a fixed seed."""
    dims = (m * m, *([hidden_width] * hidden_layers), m)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    info = {"m": m, "seed": seed, "epoch": 0, "rule": None, "embedding": None}
    if meta:
        info.update(meta)
    return MlpModel(dims, weights, biases, info)


@dataclass
class ForwardCache:
    inputs: np.ndarray                 # (B, m*m)
    pre_activations: list[np.ndarray]  # hidden-layer z values
    activations: list[np.ndarray]      # post-ReLU values, aligned with pre_activations
    probs: np.ndarray                  # (B, m) softmax outputs


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def forward(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Softmax output lottery plus the cache needed for :func:`backward`.

    Accepts a single feature vector or a (B, m*m) batch; the output matches
    the input's batch shape.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.shape[1] != model.layer_dims[0]:
        raise DimensionError(
            f"input width {batch.shape[1]} != model input width {model.layer_dims[0]}"
        )
    pre, post = [], []
    h = batch
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        post.append(h)
    probs = _softmax(h @ model.weights[-1] + model.biases[-1])
    cache = ForwardCache(batch, pre, post, probs)
    return (probs[0] if single else probs), cache


def predict(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Forward pass without keeping the cache."""
    return forward(model, x)[0]


def backward(
    model: MlpModel, cache: ForwardCache, grad_probs: np.ndarray
) -> list[np.ndarray]:
    """Exact gradients of a scalar loss w.r.t. every weight and bias.

    ``grad_probs`` is the upstream gradient on the softmax outputs, shaped
    like ``cache.probs`` (a single vector is promoted). The return value is a
    flat list aligned with ``model.parameters()``.
    """
    if cache is None:
        raise StateError("backward needs the cache from a prior forward call")
    g = np.asarray(grad_probs, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    probs = cache.probs
    if g.shape != probs.shape:
        raise DimensionError(f"upstream gradient shape {g.shape} != outputs {probs.shape}")
    # Softmax Jacobian: dz_j = p_j * (g_j - sum_k g_k p_k)
    dz = probs * (g - (g * probs).sum(axis=1, keepdims=True))
    grads: list[np.ndarray] = [None] * (2 * len(model.weights))
    for layer in range(len(model.weights) - 1, -1, -1):
        upstream = cache.activations[layer - 1] if layer > 0 else cache.inputs
        grads[2 * layer] = upstream.T @ dz
        grads[2 * layer + 1] = dz.sum(axis=0)
        if layer > 0:
            dz = (dz @ model.weights[layer].T) * (cache.pre_activations[layer - 1] > 0.0)
    return grads


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(model: MlpModel, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    params = model.parameters()
    return AdamState(
        [np.zeros_like(p) for p in params],
        [np.zeros_like(p) for p in params],
        0,
        beta1,
        beta2,
        epsilon,
    )


def adam_step(
    model: MlpModel, grads: list[np.ndarray], state: AdamState, lr: float
) -> tuple[MlpModel, AdamState]:
    """One bias-corrected Adam update. Parameters and moments update in place."""
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for p, g, m1, m2 in zip(model.parameters(), grads, state.first_moment, state.second_moment):
        m1 *= state.beta1
        m1 += (1.0 - state.beta1) * g
        m2 *= state.beta2
        m2 += (1.0 - state.beta2) * g * g
        p -= lr * (m1 / c1) / (np.sqrt(m2 / c2) + state.epsilon)
    return model, state


@dataclass(frozen=True)
class LrSchedule:
    """Reduce-on-plateau: halve the rate after `patience` non-improving epochs."""

    current_lr: float = 1e-3
    initial_lr: float = 1e-3
    patience: int = 10
    factor: float = 0.5
    min_lr: float = 1e-5
    best_metric: float = float("inf")
    epochs_since_improvement: int = 0
    improvement_tol: float = 1e-8


def schedule_update(s: LrSchedule, epoch_metric: float) -> LrSchedule:
    """Advance the schedule by one epoch of the monitored validation metric."""
    if epoch_metric < s.best_metric - s.improvement_tol:
        return replace(s, best_metric=epoch_metric, epochs_since_improvement=0)
    stalled = s.epochs_since_improvement + 1
    if stalled > s.patience:
        return replace(
            s,
            current_lr=max(s.current_lr * s.factor, s.min_lr),
            epochs_since_improvement=0,
        )
    return replace(s, epochs_since_improvement=stalled)


def save_model(path, model: MlpModel) -> None:
    """Write a versioned JSON checkpoint; floats round-trip bit-exactly."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "meta": model.meta,
        "layer_dims": list(model.layer_dims),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh)


def load_model(path) -> MlpModel:
    """Read a checkpoint written by :func:`save_model`."""
    with open(path, "r", encoding="ascii") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(
            f"checkpoint {path} has format tag {doc.get('format')!r}, expected {CHECKPOINT_FORMAT!r}"
        )
    weights = [np.asarray(w, dtype=np.float64) for w in doc["weights"]]
    biases = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
    return MlpModel(tuple(doc["layer_dims"]), weights, biases, dict(doc["meta"]))
