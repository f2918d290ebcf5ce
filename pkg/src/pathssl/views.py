"""View geometry for self-supervised training pairs.

Two samplers share one mechanism: classic crop-and-resize, which picks a
sub-rectangle by area fraction and aspect ratio and rescales it to the
output size, and extended-context translation (ECT), which draws a crop of
roughly the output size from a larger source window so that views translate
instead of zooming. A seeded Monte Carlo estimator measures the mean
intersection-over-union of view pairs, which is what the ECT source size is
calibrated against.

All randomness is counter-based: every (seed, stream, counter) triple maps
to one uniform variate, so trial results are independent of chunking or
thread scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

CROP_RESIZE = "crop_resize"
ECT = "ect"

MAX_SAMPLE_ATTEMPTS = 10

# DINOv2 crop-and-resize ranges and the ECT ranges used alongside them.
DINOV2_GLOBAL_SCALE = (0.32, 1.0)
DINOV2_LOCAL_SCALE = (0.05, 0.32)
DINOV2_ASPECT = (0.75, 1.33)
ECT_SCALE = (0.9, 1.1)
ECT_ASPECT = (0.95, 1.05)
LOCAL_OUTPUT_SIZE = 96

_MASK64 = (1 << 64) - 1
_PHI = 0x9E3779B97F4B7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
# Counter offsets for up to 4 variates per attempt (area, aspect, x, y).
_COUNTERS = np.array(
    [((k + 1) * _PHI) & _MASK64 for k in range(4 * MAX_SAMPLE_ATTEMPTS)],
    dtype=np.uint64,
)


@dataclass(frozen=True)
class ViewPolicy:
    """Parameters of one view-sampling distribution.

    ``scale_range`` is a fraction of the output-target area; for ECT it is
    re-expressed over the larger source window by the area ratio
    (output_size / source_size)**2 at sampling time.
    """

    source_size: int
    output_size: int
    scale_range: tuple[float, float]
    aspect_range: tuple[float, float]
    mode: str = CROP_RESIZE

    def __post_init__(self) -> None:
        if self.mode not in (CROP_RESIZE, ECT):
            raise ValueError(f"mode must be {CROP_RESIZE!r} or {ECT!r}, got {self.mode!r}")
        if self.source_size < 1 or self.output_size < 1:
            raise ValueError("source_size and output_size must be >= 1")
        for name in ("scale_range", "aspect_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < low <= high, got ({lo}, {hi})")
        if self.mode == ECT and self.source_size <= self.output_size:
            raise ValueError(
                f"ECT requires source_size > output_size, got "
                f"{self.source_size} <= {self.output_size}"
            )


@dataclass(frozen=True)
class CropParams:
    """One sampled view: a sub-rectangle of the source plus the output side.

    Geometry is continuous (sub-pixel offsets and extents); rounding to the
    pixel lattice happens only when the crop is resampled.
    """

    x: float
    y: float
    w: float
    h: float
    out: int

    def __post_init__(self) -> None:
        if self.x < 0 or self.y < 0:
            raise ValueError(f"crop offset must be non-negative, got ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise ValueError(f"crop extent must be >= 1 pixel, got ({self.w}, {self.h})")
        if self.out < 1:
            raise ValueError(f"output size must be >= 1, got {self.out}")


@dataclass(frozen=True)
class MeanIou:
    mean: float
    stderr: float
    trials: int


def dinov2_global_policy(source_size: int = 224, output_size: int = 224) -> ViewPolicy:
    """The DINOv2 global crop-and-resize policy on an L x L tile."""
    return ViewPolicy(source_size, output_size, DINOV2_GLOBAL_SCALE, DINOV2_ASPECT, CROP_RESIZE)


def ect_global_policy(source_size: int = 392, output_size: int = 224) -> ViewPolicy:
    """The extended-context translation policy for global views."""
    return ViewPolicy(source_size, output_size, ECT_SCALE, ECT_ASPECT, ECT)


def ect_local_policy(
    source_size: int = 392,
    tile_size: int = 224,
    output_size: int = LOCAL_OUTPUT_SIZE,
    tile_scale_range: tuple[float, float] = DINOV2_LOCAL_SCALE,
    aspect_range: tuple[float, float] = ECT_ASPECT,
) -> ViewPolicy:
    """ECT policy for local views.

    Local scale ranges are conventionally stated relative to the tile area
    (``tile_size``**2), not to the local output size, so they are converted
    here before the usual source-area adjustment applies.
    """
    factor = (tile_size / output_size) ** 2
    scale = (tile_scale_range[0] * factor, tile_scale_range[1] * factor)
    return ViewPolicy(source_size, output_size, scale, aspect_range, ECT)


def ect_effective_scale_range(
    scale_range: tuple[float, float], source_size: int, output_size: int
) -> tuple[float, float]:
    """Re-express an output-relative scale range over the source window.

    The adjustment is the ratio of areas (output_size / source_size)**2,
    so a crop of area ``scale * output_size**2`` keeps the same physical
    size when sampled from the larger source.
    """
    if source_size <= output_size:
        raise ValueError(
            f"source_size must exceed output_size, got {source_size} <= {output_size}"
        )
    factor = (output_size / source_size) ** 2
    return (scale_range[0] * factor, scale_range[1] * factor)


def _mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def _stream_base(rng_seed: int, streams: np.ndarray) -> np.ndarray:
    if rng_seed < 0:
        raise ValueError(f"rng_seed must be non-negative, got {rng_seed}")
    seeded = np.array([(rng_seed + _PHI) & _MASK64], dtype=np.uint64)
    return _mix64((streams * np.uint64(_PHI)) ^ _mix64(seeded))


def _uniforms(base: np.ndarray, counter: int) -> np.ndarray:
    """One uniform [0, 1) variate per stream at the given counter slot."""
    return (_mix64(base + _COUNTERS[counter]) >> np.uint64(11)) * 2.0**-53


def _check_feasible(
    source_size: int, scale_range: tuple[float, float], aspect_range: tuple[float, float]
) -> None:
    if source_size < 1:
        raise ValueError(f"source_size must be >= 1, got {source_size}")
    for name, (lo, hi) in (("scale_range", scale_range), ("aspect_range", aspect_range)):
        if not 0 < lo <= hi:
            raise ValueError(f"{name} must satisfy 0 < low <= high, got ({lo}, {hi})")
    # The minimum-area crop must fit inside the source for some aspect in
    # range: sqrt(scale_lo * a) <= 1 and sqrt(scale_lo / a) <= 1.
    scale_lo = scale_range[0]
    if scale_lo > 1.0 or max(aspect_range[0], scale_lo) > min(aspect_range[1], 1.0 / scale_lo):
        raise ValueError(
            f"no crop with area fraction {scale_lo} fits a {source_size}px source "
            f"for any aspect in {aspect_range}"
        )


def _sample_crop_arrays(
    rng_seed: int,
    streams: np.ndarray,
    source_size: int,
    scale_range: tuple[float, float],
    aspect_range: tuple[float, float],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw one crop per stream; returns (x, y, w, h) float arrays.

    Each stream makes up to MAX_SAMPLE_ATTEMPTS tries to fit an
    (area, aspect) draw inside the source, then falls back to a centered
    crop at the geometric mean of both ranges, clamped to the source.
    """
    _check_feasible(source_size, scale_range, aspect_range)
    base = _stream_base(rng_seed, streams)
    size = float(source_size)
    area_total = size * size
    scale_lo, scale_hi = scale_range
    log_alo, log_ahi = math.log(aspect_range[0]), math.log(aspect_range[1])

    n = streams.shape[0]
    w = np.empty(n)
    h = np.empty(n)
    x = np.empty(n)
    y = np.empty(n)
    pending = np.ones(n, dtype=bool)

    for attempt in range(MAX_SAMPLE_ATTEMPTS):
        k = 4 * attempt
        area = (scale_lo + (scale_hi - scale_lo) * _uniforms(base, k)) * area_total
        aspect = np.exp(log_alo + (log_ahi - log_alo) * _uniforms(base, k + 1))
        w_try = np.sqrt(area * aspect)
        h_try = np.sqrt(area / aspect)
        ok = pending & (w_try >= 1.0) & (h_try >= 1.0) & (w_try <= size) & (h_try <= size)
        if ok.any():
            w[ok] = w_try[ok]
            h[ok] = h_try[ok]
            x[ok] = (_uniforms(base, k + 2) * (size - w_try))[ok]
            y[ok] = (_uniforms(base, k + 3) * (size - h_try))[ok]
            pending &= ~ok
        if not pending.any():
            break

    if pending.any():
        area_gm = math.sqrt(scale_lo * scale_hi) * area_total
        aspect_gm = math.sqrt(aspect_range[0] * aspect_range[1])
        w_fb = min(max(math.sqrt(area_gm * aspect_gm), 1.0), size)
        h_fb = min(max(math.sqrt(area_gm / aspect_gm), 1.0), size)
        w[pending] = w_fb
        h[pending] = h_fb
        x[pending] = (size - w_fb) / 2.0
        y[pending] = (size - h_fb) / 2.0

    return x, y, w, h


def _crop_from_arrays(arrays, index: int, output_size: int) -> CropParams:
    x, y, w, h = arrays
    return CropParams(
        x=float(x[index]), y=float(y[index]), w=float(w[index]), h=float(h[index]),
        out=int(output_size),
    )


def sample_crop_resize(
    rng_seed: int,
    source_size: int,
    output_size: int,
    scale_range: tuple[float, float],
    aspect_range: tuple[float, float],
) -> CropParams:
    """Sample one crop-and-resize view.

    Crop area is uniform on ``scale_range`` times the source area, aspect is
    log-uniform on ``aspect_range``, and the offset is uniform over all
    placements that keep the crop fully inside the source. Deterministic
    given ``rng_seed``.
    """
    streams = np.zeros(1, dtype=np.uint64)
    arrays = _sample_crop_arrays(rng_seed, streams, source_size, scale_range, aspect_range)
    return _crop_from_arrays(arrays, 0, output_size)


def sample_ect(rng_seed: int, policy: ViewPolicy) -> CropParams:
    """Sample one extended-context translation view.

    Identical mechanism to :func:`sample_crop_resize`, but the policy's
    output-relative scale range is first multiplied by the area ratio
    (output/source)**2 so the crop stays approximately output-sized inside
    the larger source window.
    """
    if policy.mode != ECT:
        raise ValueError(f"policy mode must be {ECT!r}, got {policy.mode!r}")
    scale = ect_effective_scale_range(policy.scale_range, policy.source_size, policy.output_size)
    streams = np.zeros(1, dtype=np.uint64)
    arrays = _sample_crop_arrays(rng_seed, streams, policy.source_size, scale, policy.aspect_range)
    return _crop_from_arrays(arrays, 0, policy.output_size)


def _policy_sampling_ranges(policy: ViewPolicy) -> tuple[float, float]:
    if policy.mode == ECT:
        return ect_effective_scale_range(
            policy.scale_range, policy.source_size, policy.output_size
        )
    return policy.scale_range


def sample_view_pair(rng_seed: int, policy: ViewPolicy, trial: int = 0) -> tuple[CropParams, CropParams]:
    """Sample the two views of training pair ``trial`` under the policy.

    Views (2*trial) and (2*trial + 1) come from independent derived streams,
    so any subset of trials can be regenerated without drawing the rest.
    """
    if trial < 0:
        raise ValueError(f"trial must be non-negative, got {trial}")
    scale = _policy_sampling_ranges(policy)
    streams = np.array([2 * trial, 2 * trial + 1], dtype=np.uint64)
    arrays = _sample_crop_arrays(
        rng_seed, streams, policy.source_size, scale, policy.aspect_range
    )
    return (
        _crop_from_arrays(arrays, 0, policy.output_size),
        _crop_from_arrays(arrays, 1, policy.output_size),
    )


def view_iou(a: CropParams, b: CropParams) -> float:
    """Intersection-over-union of two crop rectangles in source coordinates."""
    inter_w = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    inter_h = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0
    inter = inter_w * inter_h
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


def _pair_iou_block(
    rng_seed: int,
    lo: int,
    hi: int,
    source_size: int,
    scale: tuple[float, float],
    aspect: tuple[float, float],
) -> np.ndarray:
    trials = np.arange(lo, hi, dtype=np.uint64)
    xa, ya, wa, ha = _sample_crop_arrays(
        rng_seed, trials * np.uint64(2), source_size, scale, aspect
    )
    xb, yb, wb, hb = _sample_crop_arrays(
        rng_seed, trials * np.uint64(2) + np.uint64(1), source_size, scale, aspect
    )
    inter_w = np.minimum(xa + wa, xb + wb) - np.maximum(xa, xb)
    inter_h = np.minimum(ya + ha, yb + hb) - np.maximum(ya, yb)
    inter = np.clip(inter_w, 0.0, None) * np.clip(inter_h, 0.0, None)
    union = wa * ha + wb * hb - inter
    return inter / union


def estimate_mean_iou(
    policy: ViewPolicy,
    trials: int,
    rng_seed: int,
    *,
    chunk_size: int = 65536,
    workers: int = 1,
) -> MeanIou:
    """Monte Carlo mean and standard error of the pair IoU under a policy.

    Trial t draws its two views from streams derived from (rng_seed, t), so
    the per-trial IoU values, and therefore the estimate, are bit-identical
    for any ``chunk_size`` or ``workers`` setting.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    scale = _policy_sampling_ranges(policy)
    aspect = policy.aspect_range

    ious = np.empty(trials)
    bounds = [(lo, min(lo + chunk_size, trials)) for lo in range(0, trials, chunk_size)]

    def run(block: tuple[int, int]) -> None:
        lo, hi = block
        ious[lo:hi] = _pair_iou_block(rng_seed, lo, hi, policy.source_size, scale, aspect)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, bounds))
    else:
        for block in bounds:
            run(block)

    mean = float(ious.mean())
    stderr = 0.0 if trials == 1 else float(ious.std(ddof=1) / math.sqrt(trials))
    return MeanIou(mean=mean, stderr=stderr, trials=trials)


def calibrate_source_size(
    target_iou: float,
    output_size: int,
    scale_range: tuple[float, float],
    aspect_range: tuple[float, float],
    candidates: list[int],
    trials: int,
    rng_seed: int,
    *,
    workers: int = 1,
) -> int:
    """Pick the ECT source size whose mean pair IoU is closest to the target.

    Every candidate is evaluated with the same seeded estimator; ties go to
    the smaller source size.
    """
    if not candidates:
        raise ValueError("candidates must be a non-empty list of source sizes")
    if any(n <= output_size for n in candidates):
        raise ValueError(f"all candidates must exceed output_size {output_size}")

    best_n = None
    best_gap = math.inf
    for n in sorted(candidates):
        policy = ViewPolicy(n, output_size, scale_range, aspect_range, ECT)
        est = estimate_mean_iou(policy, trials, rng_seed, workers=workers)
        gap = abs(est.mean - target_iou)
        if gap < best_gap:
            best_n, best_gap = n, gap
    return int(best_n)


def apply_crop(image: np.ndarray, params: CropParams) -> np.ndarray:
    """Resample the crop rectangle to an out x out grid with bilinear weights.

    Output pixel centers are placed at half-pixel spacing across the crop
    (the usual half-pixel-center convention), so a full-image crop with
    matching output size reproduces the input exactly. Samples near the
    image border replicate the edge row/column. Returns float64; channels
    pass through unchanged.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise ValueError(f"image must be 2-D or 2-D with channels, got shape {img.shape}")
    height, width = img.shape[0], img.shape[1]
    tol = 1e-9 * max(width, height)
    if params.x + params.w > width + tol or params.y + params.h > height + tol:
        raise ValueError(
            f"crop ({params.x}, {params.y}, {params.w}, {params.h}) exceeds "
            f"image bounds {width}x{height}"
        )

    out = params.out
    cols = params.x + (np.arange(out) + 0.5) * (params.w / out) - 0.5
    rows = params.y + (np.arange(out) + 0.5) * (params.h / out) - 0.5
    # Clamp the sampling coordinates, not just the indices, so the outer
    # half-pixel band replicates the edge instead of leaning inward.
    cols = np.clip(cols, 0.0, width - 1.0)
    rows = np.clip(rows, 0.0, height - 1.0)

    c0 = np.floor(cols).astype(np.intp)
    r0 = np.floor(rows).astype(np.intp)
    fc = cols - c0
    fr = rows - r0
    c1 = np.minimum(c0 + 1, width - 1)
    r1 = np.minimum(r0 + 1, height - 1)

    if img.ndim == 3:
        fr = fr[:, None, None]
        fc = fc[None, :, None]
    else:
        fr = fr[:, None]
        fc = fc[None, :]

    top = img[r0[:, None], c0[None, :]] * (1.0 - fc) + img[r0[:, None], c1[None, :]] * fc
    bottom = img[r1[:, None], c0[None, :]] * (1.0 - fc) + img[r1[:, None], c1[None, :]] * fc
    return top * (1.0 - fr) + bottom * fr
