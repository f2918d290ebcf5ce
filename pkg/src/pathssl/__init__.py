"""Pathology-oriented building blocks for self-supervised learning pipelines.

Submodules:

* ``tiling`` - HSV tissue filter and non-overlapping tile extraction
* ``views`` - crop-and-resize / extended-context translation geometry and
  Monte Carlo IoU calibration
* ``regularizers`` - nearest-neighbor and kernel-density entropy estimators
  with analytic gradients
* ``posenc`` - magnification-aware sinusoidal and learned position encodings
* ``probe`` - linear probe over frozen embeddings
* ``formats`` - EMB1 embedding container and run-config parsing
* ``cli`` - the ``pathssl`` command-line front end
"""

from .posenc import CsdConfig, EncodingGrid, LpmTable, csd_encode, csd_grid, lpm_init, lpm_lookup
from .probe import (
    LabeledEmbeddings,
    ProbeConfig,
    ProbeModel,
    cosine_lr,
    evaluate_accuracy,
    train_linear_probe,
)
from .regularizers import (
    EmbeddingBatch,
    KernelConfig,
    kde_entropy,
    kde_grad,
    koleo_entropy,
    koleo_grad,
    normalize_to_sphere,
    vmf_kernel,
)
from .tiling import HsvThresholds, SlideImage, Tile, extract_tiles, rgb_to_hsv, tissue_coverage
from .views import (
    CropParams,
    MeanIou,
    ViewPolicy,
    apply_crop,
    calibrate_source_size,
    dinov2_global_policy,
    ect_effective_scale_range,
    ect_global_policy,
    ect_local_policy,
    estimate_mean_iou,
    sample_crop_resize,
    sample_ect,
    sample_view_pair,
    view_iou,
)

__version__ = "0.1.0"

__all__ = [
    "CropParams",
    "CsdConfig",
    "EmbeddingBatch",
    "EncodingGrid",
    "HsvThresholds",
    "KernelConfig",
    "LabeledEmbeddings",
    "LpmTable",
    "MeanIou",
    "ProbeConfig",
    "ProbeModel",
    "SlideImage",
    "Tile",
    "ViewPolicy",
    "apply_crop",
    "calibrate_source_size",
    "cosine_lr",
    "csd_encode",
    "csd_grid",
    "dinov2_global_policy",
    "ect_effective_scale_range",
    "ect_global_policy",
    "ect_local_policy",
    "estimate_mean_iou",
    "evaluate_accuracy",
    "extract_tiles",
    "kde_entropy",
    "kde_grad",
    "koleo_entropy",
    "koleo_grad",
    "lpm_init",
    "lpm_lookup",
    "normalize_to_sphere",
    "rgb_to_hsv",
    "sample_crop_resize",
    "sample_ect",
    "sample_view_pair",
    "tissue_coverage",
    "train_linear_probe",
    "view_iou",
    "vmf_kernel",
]
