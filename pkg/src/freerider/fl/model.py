"""Dense softmax classifier with hand-written backprop and Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedTrainingError

PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass
class ClassifierModel:
    """input -> dense(hidden, ReLU) -> dropout -> dense(classes, softmax)."""

    params: dict
    dropout: float = 0.1

    @property
    def shapes(self) -> dict:
        return {k: self.params[k].shape for k in PARAM_NAMES}

    def copy(self) -> "ClassifierModel":
        return ClassifierModel({k: v.copy() for k, v in self.params.items()}, self.dropout)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return forward(self.params, x)[0]

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)

    def accuracy(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.mean(self.predict(x) == y))


def init_classifier(rng, n_inputs=32, hidden=32, n_classes=2, dropout=0.1) -> ClassifierModel:
    """Glorot-uniform weights, zero biases."""

    def glorot(fan_in, fan_out):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    params = {
        "W1": glorot(n_inputs, hidden),
        "b1": np.zeros(hidden),
        "W2": glorot(hidden, n_classes),
        "b2": np.zeros(n_classes),
    }
    return ClassifierModel(params, dropout)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params, x, keep_mask=None, keep_prob=1.0):
    a1 = x @ params["W1"] + params["b1"]
    h = np.maximum(a1, 0.0)
    if keep_mask is not None:
        h = h * keep_mask / keep_prob
    probs = softmax(h @ params["W2"] + params["b2"])
    return probs, (a1, h)


def loss_and_grads(params, x, y, keep_mask=None, keep_prob=1.0):
    """Mean categorical cross-entropy and its gradient for every parameter."""
    probs, (a1, h) = forward(params, x, keep_mask, keep_prob)
    n = len(y)
    loss = -float(np.mean(np.log(np.clip(probs[np.arange(n), y], 1e-300, None))))
    dz2 = probs.copy()
    dz2[np.arange(n), y] -= 1.0
    dz2 /= n
    grads = {"W2": h.T @ dz2, "b2": dz2.sum(axis=0)}
    dh = dz2 @ params["W2"].T
    if keep_mask is not None:
        dh = dh * keep_mask / keep_prob
    da1 = dh * (a1 > 0)
    grads["W1"] = x.T @ da1
    grads["b1"] = da1.sum(axis=0)
    return loss, grads


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "batch_size": self.batch_size,
        }


@dataclass
class Adam:
    config: OptimizerConfig = field(default_factory=OptimizerConfig)
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict) -> None:
        cfg = self.config
        self.t += 1
        bc1 = 1.0 - cfg.beta1**self.t
        bc2 = 1.0 - cfg.beta2**self.t
        for k in PARAM_NAMES:
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * (g * g)
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            params[k] = params[k] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def train_local(
    model: ClassifierModel,
    x: np.ndarray,
    y: np.ndarray,
    epochs: int,
    optimizer: OptimizerConfig | None = None,
    seed=0,
    dropout_seed=None,
) -> ClassifierModel:
    """Mini-batch Adam on cross-entropy; returns a trained copy.

    Batch order comes from ``seed``; dropout masks from ``dropout_seed``
    (derived from ``seed`` when omitted).  A fresh Adam state is used on
    every call.
    """
    optimizer = optimizer or OptimizerConfig()
    if x.shape[1] != model.params["W1"].shape[0]:
        raise ValueError(f"input width {x.shape[1]} does not match model {model.params['W1'].shape[0]}")
    out = model.copy()
    if epochs <= 0:
        return out
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    order_seq, mask_seq = seq.spawn(2)
    if dropout_seed is not None:
        mask_seq = np.random.SeedSequence(dropout_seed)
    order_rng = np.random.default_rng(order_seq)
    mask_rng = np.random.default_rng(mask_seq)
    keep = 1.0 - out.dropout
    adam = Adam(optimizer)
    n, bs = len(y), optimizer.batch_size
    hidden = out.params["W1"].shape[1]
    for epoch in range(epochs):
        perm = order_rng.permutation(n)
        for start in range(0, n, bs):
            idx = perm[start : start + bs]
            mask = None
            if out.dropout > 0:
                mask = (mask_rng.random((len(idx), hidden)) < keep).astype(float)
            loss, grads = loss_and_grads(out.params, x[idx], y[idx], mask, keep)
            if not math.isfinite(loss):
                raise DivergedTrainingError(
                    f"non-finite loss {loss!r} at epoch {epoch}, batch starting {start}; "
                    f"max |W1| = {np.abs(out.params['W1']).max():.3g}"
                )
            adam.step(out.params, grads)
    return out
