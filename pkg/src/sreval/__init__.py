"""Fidelity and naturalness evaluation for single-image super resolution."""

from .counterexample import (
    ContrastParams,
    WarpParams,
    block_mean_map,
    contrast_enhance,
    verify_null_space,
    warp_field,
    warp_image,
)
from .fidelity import (
    BlurKernel,
    FidelityResult,
    FidelitySearchConfig,
    convolve3,
    fidelity,
    fidelity_batch,
    gaussian_kernel3,
    psnr_center,
)
from .image import (
    ImagePlane,
    MotionVector,
    Region,
    crop_center,
    load_image,
    rgb_to_luma,
    save_pgm,
    save_png,
    translate,
)
from .iqa import (
    MetricScore,
    Preference,
    load_external_scores,
    metric_preference,
    psnr,
    ssim,
    uqi,
)
from .resample import DownsampleMethod, downsample, kernel_weight, upsample_bicubic
from .study import (
    ChoiceEvent,
    GroundTruth,
    PairRecord,
    annotator_agreement,
    generate_pairs,
    majority_vote,
    metric_hvs_correlation,
    preference_counts,
    run_study,
)

__all__ = [
    "BlurKernel",
    "ChoiceEvent",
    "ContrastParams",
    "DownsampleMethod",
    "FidelityResult",
    "FidelitySearchConfig",
    "GroundTruth",
    "ImagePlane",
    "MetricScore",
    "MotionVector",
    "PairRecord",
    "Preference",
    "Region",
    "WarpParams",
    "annotator_agreement",
    "block_mean_map",
    "contrast_enhance",
    "convolve3",
    "crop_center",
    "downsample",
    "fidelity",
    "fidelity_batch",
    "gaussian_kernel3",
    "generate_pairs",
    "kernel_weight",
    "load_external_scores",
    "load_image",
    "majority_vote",
    "metric_hvs_correlation",
    "metric_preference",
    "preference_counts",
    "psnr",
    "psnr_center",
    "rgb_to_luma",
    "run_study",
    "save_pgm",
    "save_png",
    "ssim",
    "translate",
    "upsample_bicubic",
    "uqi",
    "verify_null_space",
    "warp_field",
    "warp_image",
]

__version__ = "0.1.0"
