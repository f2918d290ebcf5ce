"""Tissue tiling walkthrough.

Builds a small synthetic slide half covered by stained tissue, partitions it
into non-overlapping 224 px tiles, and shows which tiles the HSV coverage
filter accepts. Pure blue pixels stand in for stained tissue (hue 120 on the
half-degree scale, full saturation) and white pixels for glass background
(saturation 0, so always rejected).
"""

import numpy as np

from pathssl import HsvThresholds, SlideImage, extract_tiles, rgb_to_hsv, tissue_coverage

TISSUE = (0, 0, 255)
GLASS = (255, 255, 255)

# The pixel-level filter first: where do typical colors land in HSV?
print("HSV coordinates (H in [0,180], S and V in [0,255]):")
for name, rgb in [("tissue-like blue", TISSUE), ("glass white", GLASS), ("pure red", (255, 0, 0))]:
    h, s, v = rgb_to_hsv(rgb)
    print(f"  {name:16s} rgb={rgb} -> H={h:6.1f} S={s:5.1f} V={v:5.1f}")

thresholds = HsvThresholds()
print(f"\nacceptance ranges: H {thresholds.h_range}, S {thresholds.s_range}, V {thresholds.v_range}")

# A 448 x 448 slide: the left half is tissue, the bottom-right quarter is a
# 50/50 vertical split, so the four 224 px tiles have distinct coverages.
pixels = np.full((448, 448, 3), GLASS, dtype=np.uint8)
pixels[:, :224] = TISSUE
pixels[224:, 224:336] = TISSUE
slide = SlideImage(pixels=pixels, mpp=0.5)

print("\nper-tile coverage of the synthetic slide:")
for y in (0, 224):
    for x in (0, 224):
        cov = tissue_coverage(pixels[y : y + 224, x : x + 224])
        print(f"  tile at ({x:3d},{y:3d}): coverage {cov:.3f}")

tiles = extract_tiles(slide, tile_size=224, min_coverage=0.45)
print(f"\naccepted tiles at min coverage 0.45 (row-major): {[t.origin for t in tiles]}")
print("manifest lines (x,y,size,mpp,coverage):")
for tile in tiles:
    print(f"  {tile.origin[0]},{tile.origin[1]},{tile.size},{tile.mpp},{tile.coverage}")

# Dropping the threshold to 0.4 does not change anything here (the rejected
# tile has coverage 0.0), but shrinking the value range can empty the slide:
strict = HsvThresholds(v_range=(250, 255))
print(f"\nwith V restricted to [250,255]: {len(extract_tiles(slide, 224, strict))} tiles accepted")
