"""Linear probe over frozen embeddings.

Multinomial logistic regression trained with plain SGD plus momentum under
a cosine learning-rate schedule, then scored by argmax test accuracy. The
training loop is single-threaded and fully determined by the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LabeledEmbeddings:
    """Frozen embeddings with integer class labels."""

    embeddings: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        emb = self.embeddings
        lab = self.labels
        if emb.ndim != 2:
            raise ValueError(f"embeddings must be 2-D (n, D), got shape {emb.shape}")
        if lab.ndim != 1 or lab.shape[0] != emb.shape[0]:
            raise ValueError(
                f"labels must be 1-D with one entry per row, got {lab.shape} "
                f"for {emb.shape[0]} rows"
            )
        if emb.shape[0] < 1:
            raise ValueError("need at least one sample")
        if not np.issubdtype(lab.dtype, np.integer):
            raise ValueError(f"labels must be integers, got dtype {lab.dtype}")
        if lab.min(initial=0) < 0:
            raise ValueError("labels must be non-negative")
        if not np.isfinite(emb).all():
            raise ValueError("embeddings contain NaN or Inf")

    @property
    def n(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class ProbeConfig:
    iterations: int = 12500
    base_lr: float = 0.01
    final_lr: float = 0.0
    momentum: float = 0.9
    batch_size: int = 256
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not 0.0 <= self.final_lr <= self.base_lr:
            raise ValueError(
                f"need 0 <= final_lr <= base_lr, got {self.final_lr} > {self.base_lr}"
            )
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class ProbeModel:
    """Trained classifier: logits(x) = weights @ x + bias."""

    weights: np.ndarray  # (C, D)
    bias: np.ndarray  # (C,)
    final_train_loss: float | None = None


def cosine_lr(t: int, cfg: ProbeConfig) -> float:
    """Learning rate at iteration t of a half-cosine decay.

    Runs from base_lr at t = 0 to final_lr at t = iterations.
    """
    if t < 0 or t > cfg.iterations:
        raise ValueError(f"t must be in [0, {cfg.iterations}], got {t}")
    if cfg.iterations == 0:
        return cfg.base_lr
    span = cfg.base_lr - cfg.final_lr
    return cfg.final_lr + 0.5 * span * (1.0 + math.cos(math.pi * t / cfg.iterations))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def train_linear_probe(train: LabeledEmbeddings, cfg: ProbeConfig) -> ProbeModel:
    """Fit the probe by cross-entropy SGD over seeded mini-batch shuffles.

    Weights start at zero (the objective is convex, so initialization only
    fixes the trajectory), indices are re-shuffled every epoch from a
    generator seeded by cfg.rng_seed, and the learning rate follows
    :func:`cosine_lr`. Bit-identical weights for identical inputs and
    config.
    """
    classes = np.unique(train.labels)
    if classes.size < 2:
        raise ValueError(f"training set has a single class ({classes.tolist()})")
    if cfg.batch_size > train.n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds training size {train.n}")

    num_classes = train.num_classes
    x = np.asarray(train.embeddings, dtype=np.float64)
    y = np.asarray(train.labels)

    weights = np.zeros((num_classes, train.dim))
    bias = np.zeros(num_classes)
    vel_w = np.zeros_like(weights)
    vel_b = np.zeros_like(bias)

    rng = np.random.default_rng(cfg.rng_seed)
    order = np.empty(0, dtype=np.intp)
    cursor = 0
    last_loss: float | None = None

    for t in range(cfg.iterations):
        if cursor >= order.shape[0]:
            order = rng.permutation(train.n)
            cursor = 0
        batch = order[cursor : cursor + cfg.batch_size]
        cursor += cfg.batch_size

        xb = x[batch]
        yb = y[batch]
        probs = _softmax(xb @ weights.T + bias)
        loss = float(-np.mean(np.log(probs[np.arange(batch.shape[0]), yb])))
        if math.isnan(loss):
            raise ValueError(f"loss became NaN at iteration {t}")
        last_loss = loss

        probs[np.arange(batch.shape[0]), yb] -= 1.0
        probs /= batch.shape[0]
        grad_w = probs.T @ xb
        grad_b = probs.sum(axis=0)

        lr = cosine_lr(t, cfg)
        vel_w = cfg.momentum * vel_w + grad_w
        vel_b = cfg.momentum * vel_b + grad_b
        weights -= lr * vel_w
        bias -= lr * vel_b

    return ProbeModel(weights=weights, bias=bias, final_train_loss=last_loss)


def evaluate_accuracy(model: ProbeModel, test: LabeledEmbeddings) -> float:
    """Fraction of test rows whose argmax logit hits the label.

    Logit ties resolve to the lowest class index.
    """
    if test.n < 1:
        raise ValueError("test set is empty")
    if test.dim != model.weights.shape[1]:
        raise ValueError(
            f"dimension mismatch: model expects D={model.weights.shape[1]}, "
            f"test has D={test.dim}"
        )
    logits = np.asarray(test.embeddings, dtype=np.float64) @ model.weights.T + model.bias
    predictions = np.argmax(logits, axis=1)
    return float(np.mean(predictions == test.labels))
