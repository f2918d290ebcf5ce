"""Independent reference implementations used to check the library.

Everything here is deliberately written the slow, obvious way (scalar loops,
stdlib color math, mask-based rejection with numpy's own generator) so that
agreement with the package is evidence, not tautology.
"""

from __future__ import annotations

import colorsys
import math

import numpy as np


def hsv_reference(r: int, g: int, b: int) -> tuple[float, float, float]:
    """Per-pixel RGB->HSV via the stdlib, mapped to H/2 degrees and 0..255."""
    h, s, v = colorsys.rgb_to_hsv(r / 255.0, g / 255.0, b / 255.0)
    return h * 180.0, s * 255.0, v * 255.0


def bilinear_reference(image: np.ndarray, x: float, y: float, w: float, h: float, out: int) -> np.ndarray:
    """Scalar-loop crop-and-resize with half-pixel centers and edge clamping."""
    img = np.asarray(image, dtype=np.float64)
    height, width = img.shape[0], img.shape[1]
    result = np.zeros((out, out) + img.shape[2:], dtype=np.float64)
    for row in range(out):
        for col in range(out):
            sx = min(max(x + (col + 0.5) * (w / out) - 0.5, 0.0), width - 1.0)
            sy = min(max(y + (row + 0.5) * (h / out) - 0.5, 0.0), height - 1.0)
            c0 = math.floor(sx)
            r0 = math.floor(sy)
            fc = sx - c0
            fr = sy - r0
            c1 = min(c0 + 1, width - 1)
            r1 = min(r0 + 1, height - 1)
            top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
            bottom = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
            result[row, col] = top * (1 - fr) + bottom * fr
    return result


def koleo_reference(z: np.ndarray, floor: float = 1e-8) -> float:
    """O(n^2) double-loop mean log nearest-neighbor distance."""
    n = z.shape[0]
    total = 0.0
    for i in range(n):
        nearest = math.inf
        for j in range(n):
            if j == i:
                continue
            nearest = min(nearest, float(np.linalg.norm(z[i] - z[j])))
        total += math.log(max(nearest, floor))
    return total / n


def kde_reference(z: np.ndarray, kappa: float) -> float:
    """O(n^2) double-loop kernel-density entropy with the exp(kappa x.y) kernel."""
    n = z.shape[0]
    total = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if j == i:
                continue
            acc += math.exp(kappa * float(np.dot(z[i], z[j])))
        total += math.log(acc)
    return -total / n


def finite_difference_grad(func, z: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of an (n, D) array."""
    z = np.asarray(z, dtype=np.float64)
    grad = np.zeros_like(z)
    for i in range(z.shape[0]):
        for j in range(z.shape[1]):
            bumped = z.copy()
            bumped[i, j] = z[i, j] + step
            upper = func(bumped)
            bumped[i, j] = z[i, j] - step
            lower = func(bumped)
            grad[i, j] = (upper - lower) / (2.0 * step)
    return grad


def csd_reference(px: float, py: float, mpp: float, ref_mpp: float, omega: float, dim: int) -> np.ndarray:
    """Scalar-loop sinusoidal encoding: x codes then y codes, sin/cos interleaved."""
    half = dim // 2
    values = np.zeros(dim)
    for axis, pos in enumerate((px, py)):
        for pair in range(dim // 4):
            arg = (mpp / ref_mpp) * pos / omega ** (2.0 * pair / dim)
            values[axis * half + 2 * pair] = math.sin(arg)
            values[axis * half + 2 * pair + 1] = math.cos(arg)
    return values


def sample_view_reference(
    rng: np.random.Generator,
    source: int,
    scale: tuple[float, float],
    aspect: tuple[float, float],
    n: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Mask-based rejection sampler over numpy's PCG64, one batch of n crops."""
    x = np.empty(n)
    y = np.empty(n)
    w = np.empty(n)
    h = np.empty(n)
    pending = np.ones(n, dtype=bool)
    for _ in range(10):
        m = int(pending.sum())
        if m == 0:
            break
        area = rng.uniform(scale[0], scale[1], m) * source * source
        ratio = np.exp(rng.uniform(math.log(aspect[0]), math.log(aspect[1]), m))
        w_try = np.sqrt(area * ratio)
        h_try = np.sqrt(area / ratio)
        fits = (w_try >= 1) & (h_try >= 1) & (w_try <= source) & (h_try <= source)
        idx = np.flatnonzero(pending)[fits]
        w[idx] = w_try[fits]
        h[idx] = h_try[fits]
        x[idx] = rng.uniform(0.0, 1.0, int(fits.sum())) * (source - w_try[fits])
        y[idx] = rng.uniform(0.0, 1.0, int(fits.sum())) * (source - h_try[fits])
        pending[idx] = False
    if pending.any():
        area = math.sqrt(scale[0] * scale[1]) * source * source
        ratio = math.sqrt(aspect[0] * aspect[1])
        w_fb = min(max(math.sqrt(area * ratio), 1.0), source)
        h_fb = min(max(math.sqrt(area / ratio), 1.0), source)
        w[pending] = w_fb
        h[pending] = h_fb
        x[pending] = (source - w_fb) / 2.0
        y[pending] = (source - h_fb) / 2.0
    return x, y, w, h


def mean_iou_reference(
    seed: int,
    source: int,
    scale: tuple[float, float],
    aspect: tuple[float, float],
    trials: int,
) -> tuple[float, float]:
    """Straightforward pair-IoU simulation; returns (mean, stderr)."""
    rng = np.random.default_rng(seed)
    x1, y1, w1, h1 = sample_view_reference(rng, source, scale, aspect, trials)
    x2, y2, w2, h2 = sample_view_reference(rng, source, scale, aspect, trials)
    inter_w = np.minimum(x1 + w1, x2 + w2) - np.maximum(x1, x2)
    inter_h = np.minimum(y1 + h1, y2 + h2) - np.maximum(y1, y2)
    inter = np.clip(inter_w, 0.0, None) * np.clip(inter_h, 0.0, None)
    iou = inter / (w1 * h1 + w2 * h2 - inter)
    return float(iou.mean()), float(iou.std(ddof=1) / math.sqrt(trials))
