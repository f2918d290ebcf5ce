"""HSV tissue filtering and non-overlapping tile extraction for slide images.

Slides are partitioned into a grid of square tiles anchored at the top-left
corner; a tile is accepted when the fraction of its pixels passing an
inclusive HSV range filter reaches the coverage threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MIN_COVERAGE = 0.45


@dataclass(frozen=True)
class HsvThresholds:
    """Inclusive HSV acceptance ranges.

    Hue is on the half-degree scale [0, 180]; saturation and value on
    [0, 255]. The defaults accept the typical stained-tissue gamut and
    reject white/gray background.
    """

    h_range: tuple[float, float] = (90, 180)
    s_range: tuple[float, float] = (8, 255)
    v_range: tuple[float, float] = (103, 255)

    def __post_init__(self) -> None:
        tops = {"h_range": 180, "s_range": 255, "v_range": 255}
        for name, top in tops.items():
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi <= top:
                raise ValueError(
                    f"{name} must satisfy 0 <= low <= high <= {top}, got ({lo}, {hi})"
                )


@dataclass(frozen=True)
class SlideImage:
    """An RGB slide region at a known physical scale (microns per pixel)."""

    pixels: np.ndarray
    mpp: float

    def __post_init__(self) -> None:
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"pixels must have shape (height, width, 3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("slide must be at least 1x1 pixels")
        if not self.mpp > 0:
            raise ValueError(f"mpp must be positive, got {self.mpp}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class Tile:
    """A square tile cut from a slide.

    ``origin`` is the (x, y) pixel offset of the tile's top-left corner in
    the source slide; ``coverage`` is the tissue fraction that was measured
    when the tile was extracted.
    """

    pixels: np.ndarray
    mpp: float
    origin: tuple[int, int]
    coverage: float

    def __post_init__(self) -> None:
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] != px.shape[1]:
            raise ValueError(f"tile pixels must be square (L, L, 3), got {px.shape}")
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage must be in [0, 1], got {self.coverage}")

    @property
    def size(self) -> int:
        return self.pixels.shape[0]


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Convert 8-bit RGB values to HSV with H in [0, 180] and S, V in [0, 255].

    Accepts a single (r, g, b) triple or any array whose last axis has
    length 3; the output has the same shape in float64. Hue is the usual
    [0, 360) angle halved onto [0, 180); achromatic pixels get H = S = 0.
    """
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ValueError(f"last axis must have length 3, got shape {arr.shape}")
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    v = arr.max(axis=-1)
    c = v - arr.min(axis=-1)

    with np.errstate(divide="ignore", invalid="ignore"):
        hue = np.select(
            [c == 0, v == r, v == g],
            [0.0, ((g - b) / c) % 6.0, (b - r) / c + 2.0],
            default=(r - g) / c + 4.0,
        )
        sat = np.where(v > 0, c / v * 255.0, 0.0)

    hsv = np.stack([hue * 30.0, sat, v], axis=-1)  # 60 deg/sector, halved
    return hsv


def tissue_coverage(tile: Tile | np.ndarray, thresholds: HsvThresholds | None = None) -> float:
    """Fraction of pixels whose H, S and V all fall inside the inclusive ranges."""
    if thresholds is None:
        thresholds = HsvThresholds()
    pixels = tile.pixels if isinstance(tile, Tile) else np.asarray(tile)
    if pixels.size == 0:
        raise ValueError("cannot compute coverage of an empty tile")
    hsv = rgb_to_hsv(pixels)
    return float(_range_mask(hsv, thresholds).mean())


def _range_mask(hsv: np.ndarray, thresholds: HsvThresholds) -> np.ndarray:
    mask = np.ones(hsv.shape[:-1], dtype=bool)
    for channel, (lo, hi) in enumerate(
        (thresholds.h_range, thresholds.s_range, thresholds.v_range)
    ):
        mask &= (hsv[..., channel] >= lo) & (hsv[..., channel] <= hi)
    return mask


def extract_tiles(
    slide: SlideImage,
    tile_size: int,
    thresholds: HsvThresholds | None = None,
    min_coverage: float = DEFAULT_MIN_COVERAGE,
) -> list[Tile]:
    """Cut the slide into a non-overlapping grid and keep sufficiently covered tiles.

    The grid is anchored at (0, 0) and right/bottom remainders smaller than
    ``tile_size`` are dropped. Tiles are returned in row-major order of their
    origins, keeping only those with coverage >= ``min_coverage``. Coverage is
    measured at the slide's native resolution.
    """
    if thresholds is None:
        thresholds = HsvThresholds()
    if tile_size < 1:
        raise ValueError(f"tile_size must be >= 1, got {tile_size}")
    if tile_size > min(slide.height, slide.width):
        raise ValueError(
            f"tile_size {tile_size} exceeds slide dimensions "
            f"{slide.width}x{slide.height}"
        )
    if not 0.0 <= min_coverage <= 1.0:
        raise ValueError(f"min_coverage must be in [0, 1], got {min_coverage}")

    # One slide-wide conversion, then per-tile averaging of the boolean mask.
    mask = _range_mask(rgb_to_hsv(slide.pixels), thresholds)

    tiles: list[Tile] = []
    for y in range(0, slide.height - tile_size + 1, tile_size):
        for x in range(0, slide.width - tile_size + 1, tile_size):
            coverage = float(mask[y : y + tile_size, x : x + tile_size].mean())
            if coverage >= min_coverage:
                tiles.append(
                    Tile(
                        pixels=slide.pixels[y : y + tile_size, x : x + tile_size].copy(),
                        mpp=slide.mpp,
                        origin=(x, y),
                        coverage=coverage,
                    )
                )
    return tiles
