"""Batch diversity regularizers on the unit hypersphere.

Two differential-entropy estimators with analytic gradients:

* the nearest-neighbor estimator, the mean log distance to each point's
  nearest neighbor — its per-point gradient norm is 1/d and blows up as a
  pair collapses;
* the kernel-density estimator built on the von Mises-Fisher kernel
  exp(kappa * x.y) — its per-point gradient stays bounded by kappa no
  matter how close two points get.

Both are plain functions of the embedding rows; normalization onto the
sphere is treated as an upstream step, so gradients are with respect to the
normalized embeddings themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Unit-norm tolerance for rows of a normalized batch.
NORM_ATOL = 1e-6

#: Distances below this floor are clamped before entering the log.
MIN_NN_DISTANCE = 1e-8


@dataclass(frozen=True)
class EmbeddingBatch:
    """n embedding vectors of dimension D, optionally unit-normalized."""

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        arr = self.data
        if arr.ndim != 2:
            raise ValueError(f"data must be a 2-D (n, D) array, got shape {arr.shape}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class KernelConfig:
    """Kernel choice and concentration for the density estimator."""

    kind: str = "vmf"
    kappa: float = 5.0

    def __post_init__(self) -> None:
        if self.kind != "vmf":
            raise ValueError(f"only the 'vmf' kernel is supported, got {self.kind!r}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


def normalize_to_sphere(batch: EmbeddingBatch) -> EmbeddingBatch:
    """Divide every row by its Euclidean norm. Idempotent on unit rows."""
    data = np.asarray(batch.data, dtype=np.float64)
    norms = np.linalg.norm(data, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"row {zero[0]} has zero norm and no direction on the sphere")
    return EmbeddingBatch(data=data / norms[:, None], normalized=True)


def vmf_kernel(x: np.ndarray, y: np.ndarray, cfg: KernelConfig | None = None) -> float:
    """exp(kappa * x.y) for unit vectors x, y."""
    if cfg is None:
        cfg = KernelConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    for name, vec in (("x", x), ("y", y)):
        if abs(np.linalg.norm(vec) - 1.0) > NORM_ATOL:
            raise ValueError(f"{name} must be unit-norm within {NORM_ATOL}")
    return float(np.exp(cfg.kappa * np.dot(x, y)))


def _entropy_input(batch: EmbeddingBatch) -> np.ndarray:
    if not batch.normalized:
        raise ValueError("batch must be normalized to the sphere first")
    if batch.n < 2:
        raise ValueError(f"entropy needs at least 2 embeddings, got {batch.n}")
    return np.asarray(batch.data, dtype=np.float64)


def _nn_distances(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row nearest-neighbor distance and index (ties -> lowest index)."""
    sq = np.sum(z * z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    nn = np.argmin(d2, axis=1)
    dist = np.sqrt(d2[np.arange(z.shape[0]), nn])
    return dist, nn


def koleo_entropy(batch: EmbeddingBatch) -> float:
    """Mean log nearest-neighbor distance over the batch.

    Distances are clamped below at MIN_NN_DISTANCE so duplicate points give
    a large negative value instead of -inf.
    """
    z = _entropy_input(batch)
    dist, _ = _nn_distances(z)
    return float(np.mean(np.log(np.maximum(dist, MIN_NN_DISTANCE))))


def koleo_grad(batch: EmbeddingBatch) -> np.ndarray:
    """Exact gradient of :func:`koleo_entropy` with respect to each row.

    Each point i contributes through its own nearest-neighbor term and
    through every term in which it is the nearest neighbor; clamped pairs
    contribute nothing.
    """
    z = _entropy_input(batch)
    n = z.shape[0]
    dist, nn = _nn_distances(z)

    grad = np.zeros_like(z)
    active = dist >= MIN_NN_DISTANCE
    idx = np.flatnonzero(active)
    if idx.size:
        pull = (z[idx] - z[nn[idx]]) / (dist[idx] ** 2)[:, None]
        np.add.at(grad, idx, pull)
        np.add.at(grad, nn[idx], -pull)
    return grad / n


def _log_kernel_sums(z: np.ndarray, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise log sum_{j != i} exp(kappa z_i.z_j) and the softmax weights."""
    logits = kappa * (z @ z.T)
    np.fill_diagonal(logits, -np.inf)
    peak = logits.max(axis=1)
    weights = np.exp(logits - peak[:, None])
    totals = weights.sum(axis=1)
    return peak + np.log(totals), weights / totals[:, None]


def kde_entropy(batch: EmbeddingBatch, cfg: KernelConfig | None = None) -> float:
    """Kernel-density entropy: -mean_i log sum_{j != i} exp(kappa z_i.z_j)."""
    if cfg is None:
        cfg = KernelConfig()
    z = _entropy_input(batch)
    log_sums, _ = _log_kernel_sums(z, cfg.kappa)
    return float(-np.mean(log_sums))


def kde_grad(batch: EmbeddingBatch, cfg: KernelConfig | None = None) -> np.ndarray:
    """Exact gradient of :func:`kde_entropy` with respect to each row.

    With W the row-softmax of the pairwise kernel logits (diagonal excluded),
    the gradient is -(kappa/n) * (W + W.T) @ Z; per-row norms are bounded by
    kappa because softmax weights sum to one over unit vectors.
    """
    if cfg is None:
        cfg = KernelConfig()
    z = _entropy_input(batch)
    _, weights = _log_kernel_sums(z, cfg.kappa)
    return -(cfg.kappa / z.shape[0]) * ((weights + weights.T) @ z)
