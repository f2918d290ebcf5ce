"""View geometry: crop-and-resize vs extended-context translation.

Compares the two samplers that generate training-pair views. Crop-and-resize
zooms: it cuts 32..100% of a 224 px tile at aspect ratios up to 1.33 and
rescales to 224, so shapes get distorted. Extended-context translation (ECT)
instead slides an approximately 224 px window around a larger 392 px source,
which keeps shapes nearly intact. The price is geometric: a Monte Carlo
sweep of the mean view-pair IoU shows how overlap decays with source size.
"""

import numpy as np

from pathssl import (
    apply_crop,
    dinov2_global_policy,
    ect_effective_scale_range,
    ect_global_policy,
    estimate_mean_iou,
    sample_view_pair,
    view_iou,
)
from pathssl.views import ECT_ASPECT, ECT_SCALE, ViewPolicy

# The ECT arithmetic: the output-relative scale band re-expressed over the
# larger source by the area ratio (224/392)^2.
lo, hi = ect_effective_scale_range(ECT_SCALE, 392, 224)
print(f"ECT effective scale range over a 392 px source: ({lo:.5f}, {hi:.5f})")
print(f"  -> crop sides near sqrt(0.9)*224 = {np.sqrt(0.9)*224:.1f} .. sqrt(1.1)*224 = {np.sqrt(1.1)*224:.1f} px\n")

# Draw a few pairs from each policy and look at the geometry.
for name, policy in [("crop-and-resize", dinov2_global_policy()), ("ECT", ect_global_policy())]:
    print(f"{name} sample pairs (x, y, w, h -> out):")
    for trial in range(3):
        a, b = sample_view_pair(rng_seed=7, policy=policy, trial=trial)
        print(
            f"  trial {trial}: A=({a.x:6.1f},{a.y:6.1f},{a.w:6.1f},{a.h:6.1f})"
            f"  B=({b.x:6.1f},{b.y:6.1f},{b.w:6.1f},{b.h:6.1f})  IoU={view_iou(a, b):.3f}"
        )
    draws = [c for t in range(2000) for c in sample_view_pair(7, policy, trial=t)]
    stretch = max(max(c.w / c.h, c.h / c.w) for c in draws)
    print(f"  worst shape stretch over 4000 draws: {stretch:.3f}\n")

# Resampling: a full-frame crop reproduces the image exactly; a fractional
# ECT crop stays bilinear-smooth with no padding at the borders.
image = np.arange(16.0).reshape(4, 4)
identity = apply_crop(image, sample_view_pair(0, ViewPolicy(4, 4, (1.0, 1.0), (1.0, 1.0)))[0])
print(f"full-frame crop is the identity: {np.array_equal(identity, image)}\n")

# The calibration sweep: mean pair IoU per source size, next to the
# crop-and-resize baseline it would be matched against.
baseline = estimate_mean_iou(dinov2_global_policy(), trials=200_000, rng_seed=11)
print(f"crop-and-resize baseline mean IoU on 224 tiles: {baseline.mean:.4f} (se {baseline.stderr:.4f})")
print("ECT mean pair IoU by source size:")
for source in (280, 336, 392, 448, 560):
    policy = ViewPolicy(source, 224, ECT_SCALE, ECT_ASPECT, "ect")
    est = estimate_mean_iou(policy, trials=200_000, rng_seed=11)
    marker = " <- closest to baseline" if abs(est.mean - baseline.mean) < 0.05 else ""
    print(f"  N={source}: {est.mean:.4f} (se {est.stderr:.4f}){marker}")
print(
    "\nOverlap decays quickly with source size; a 392 px window trades most"
    "\nof the crop-policy overlap away in exchange for distortion-free views."
)
