"""Scale-aware position encodings for patch grids at known magnifications.

Two schemes for injecting physical scale (microns per pixel) into ViT-style
position information:

* sinusoidal encodings whose argument is the grid index scaled by the
  magnification relative to a reference, so two patches covering the same
  physical distance get the same code regardless of magnification;
* independently learned tables, one per pre-declared magnification, which
  cannot serve magnifications outside that set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_OMEGA = 10000.0
DEFAULT_REF_MPP = 0.5  # 20x, the most common training magnification
DEFAULT_INIT_STD = 0.02


@dataclass(frozen=True)
class CsdConfig:
    """Shape and frequency layout of the sinusoidal encoding.

    ``dim`` must be divisible by 4: one half of the vector per grid axis,
    and sin/cos pairs within each half. ``omega`` modulates the frequency
    ladder; ``ref_mpp`` is the magnification at which one grid step maps to
    an argument of exactly one.
    """

    dim: int
    omega: float = DEFAULT_OMEGA
    ref_mpp: float = DEFAULT_REF_MPP

    def __post_init__(self) -> None:
        if self.dim <= 0 or self.dim % 4 != 0:
            raise ValueError(f"dim must be a positive multiple of 4, got {self.dim}")
        if not self.omega > 1:
            raise ValueError(f"omega must exceed 1, got {self.omega}")
        if not self.ref_mpp > 0:
            raise ValueError(f"ref_mpp must be positive, got {self.ref_mpp}")


@dataclass(frozen=True)
class EncodingGrid:
    """A (grid_h, grid_w, D) block of position codes for one magnification."""

    values: np.ndarray
    mpp: float


@dataclass(frozen=True)
class LpmTable:
    """One learned position-encoding table per registered magnification."""

    tables: dict[float, np.ndarray]
    init_std: float


def _inverse_frequencies(cfg: CsdConfig) -> np.ndarray:
    pair_index = np.arange(cfg.dim // 4, dtype=np.float64)
    return cfg.omega ** (-2.0 * pair_index / cfg.dim)


def _axis_half(scaled_pos: np.ndarray, inv_freq: np.ndarray) -> np.ndarray:
    """Interleaved sin/cos codes for one axis; scaled_pos shape (...,)."""
    args = scaled_pos[..., None] * inv_freq
    half = np.empty(scaled_pos.shape + (2 * inv_freq.shape[0],), dtype=np.float64)
    half[..., 0::2] = np.sin(args)
    half[..., 1::2] = np.cos(args)
    return half


def csd_encode(p: tuple[float, float], mpp: float, cfg: CsdConfig) -> np.ndarray:
    """Encode grid position ``p`` = (p_x, p_y) at magnification ``mpp``.

    The first half of the vector encodes p_x and the second half p_y; slot
    pair i of each half holds sin and cos of
    (mpp / ref_mpp) * p_axis / omega**(2i / dim).
    Positions enter only through the product mpp * p_axis, which is what
    makes codes at different magnifications physically comparable.
    """
    px, py = p
    if px < 0 or py < 0:
        raise ValueError(f"grid position must be non-negative, got {p}")
    inv_freq = _inverse_frequencies(cfg)
    ratio = mpp / cfg.ref_mpp
    return np.concatenate(
        [
            _axis_half(np.asarray(ratio * px, dtype=np.float64), inv_freq),
            _axis_half(np.asarray(ratio * py, dtype=np.float64), inv_freq),
        ]
    )


def csd_grid(grid_h: int, grid_w: int, mpp: float, cfg: CsdConfig) -> EncodingGrid:
    """Apply :func:`csd_encode` at every index of a grid_h x grid_w grid.

    Entry [row, col] encodes p = (col, row). Parameter-free and
    deterministic.
    """
    if grid_h < 1 or grid_w < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {grid_h}x{grid_w}")
    inv_freq = _inverse_frequencies(cfg)
    ratio = mpp / cfg.ref_mpp
    scaled_x = ratio * np.arange(grid_w, dtype=np.float64)
    scaled_y = ratio * np.arange(grid_h, dtype=np.float64)

    x_half = np.broadcast_to(
        _axis_half(scaled_x, inv_freq)[None, :, :], (grid_h, grid_w, cfg.dim // 2)
    )
    y_half = np.broadcast_to(
        _axis_half(scaled_y, inv_freq)[:, None, :], (grid_h, grid_w, cfg.dim // 2)
    )
    return EncodingGrid(values=np.concatenate([x_half, y_half], axis=2), mpp=mpp)


def lpm_init(
    magnifications: list[float],
    grid_h: int,
    grid_w: int,
    dim: int,
    rng_seed: int,
    init_std: float = DEFAULT_INIT_STD,
) -> LpmTable:
    """Create one Normal(0, init_std**2) table per magnification.

    Tables are drawn sequentially from a single seeded generator, so the
    whole set is reproducible from ``rng_seed``.
    """
    if not magnifications:
        raise ValueError("magnifications must be a non-empty list")
    if len(set(magnifications)) != len(magnifications):
        raise ValueError(f"duplicate magnifications in {magnifications}")
    if grid_h < 1 or grid_w < 1 or dim < 1:
        raise ValueError("grid dimensions and dim must be >= 1")
    if not init_std > 0:
        raise ValueError(f"init_std must be positive, got {init_std}")

    rng = np.random.default_rng(rng_seed)
    tables = {
        float(mpp): rng.normal(0.0, init_std, size=(grid_h, grid_w, dim))
        for mpp in magnifications
    }
    return LpmTable(tables=tables, init_std=init_std)


def lpm_lookup(table: LpmTable, mpp: float) -> np.ndarray:
    """Return the table for a registered magnification.

    Unknown magnifications are an error by design: learned-per-magnification
    encodings cannot be interpolated to scales that were not declared up
    front.
    """
    key = float(mpp)
    if key not in table.tables:
        known = sorted(table.tables)
        raise ValueError(f"magnification {mpp} not registered; known: {known}")
    return table.tables[key]
