"""Constructions of visually distinct images sharing one low-res projection.

Two witnesses: a contrast boost that leaves every 2x2 block mean (and so
the 2x box down-sampling) untouched, and a center-heavy spatial warp that
wrecks pixelwise scores while barely changing what a viewer sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import ImagePlane
from .resample import DownsampleMethod, downsample


@dataclass(frozen=True)
class ContrastParams:
    """Gain applied to the residue against the 2x2 block-mean map."""

    c: float
    block: int = 2

    def __post_init__(self) -> None:
        if not np.isfinite(self.c) or self.c < 0:
            raise ValueError(f"contrast gain must be finite and >= 0, got {self.c}")
        if self.block != 2:
            raise ValueError("only 2x2 blocks are supported")


@dataclass(frozen=True)
class WarpParams:
    """Peak displacement in pixels and the axis it is applied along."""

    max_mv: float = 40.0
    axis: str = "horizontal"

    def __post_init__(self) -> None:
        if self.max_mv < 0:
            raise ValueError(f"max_mv must be >= 0, got {self.max_mv}")
        if self.axis not in ("horizontal", "vertical"):
            raise ValueError(f"axis must be horizontal or vertical, got {self.axis!r}")


def _require_even(img: ImagePlane) -> None:
    if img.width % 2 or img.height % 2:
        raise ValueError(
            f"image {img.width}x{img.height} must have even dimensions"
        )


def block_mean_map(img: ImagePlane) -> ImagePlane:
    """Replace each non-overlapping 2x2 block by its mean value."""
    _require_even(img)
    h, w = img.shape
    means = img.data.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
    return ImagePlane(np.repeat(np.repeat(means, 2, axis=0), 2, axis=1))


def contrast_enhance(img: ImagePlane, params: ContrastParams) -> ImagePlane:
    """Boost contrast without changing any 2x2 block mean.

    E = A + c * (A - block_mean_map(A)). No clamping; exporting to 8-bit
    clips and voids the exact projection identity.
    """
    _require_even(img)
    residue = img.data - block_mean_map(img).data
    return ImagePlane(img.data + params.c * residue)


def warp_field(width: int, height: int, params: WarpParams) -> ImagePlane:
    """Per-pixel displacement magnitude: large at center, small at edges."""
    if width < 1 or height < 1:
        raise ValueError(f"degenerate size {width}x{height}")
    x = np.arange(width, dtype=np.float64)
    y = np.arange(height, dtype=np.float64)
    mx = np.minimum(x, width - x) / width
    my = np.minimum(y, height - y) / height
    return ImagePlane(np.minimum(my[:, None], mx[None, :]) * params.max_mv)


def warp_image(img: ImagePlane, params: WarpParams) -> ImagePlane:
    """Displace samples by the warp field along one axis, bilinearly.

    Source coordinates are clamped to the image, so no content is invented.
    The x = 0 column and y = 0 row have zero displacement and stay fixed.
    """
    h, w = img.shape
    m = warp_field(w, h, params).data
    data = img.data
    if params.axis == "vertical":
        data = data.T
        m = m.T
    hh, ww = data.shape
    cols = np.arange(ww, dtype=np.float64)[None, :]
    src = cols - m
    x0 = np.floor(src)
    frac = src - x0
    i0 = np.clip(x0.astype(np.int64), 0, ww - 1)
    i1 = np.clip(i0 + 1, 0, ww - 1)
    rows = np.arange(hh)[:, None]
    out = data[rows, i0] * (1.0 - frac) + data[rows, i1] * frac
    if params.axis == "vertical":
        out = out.T
    return ImagePlane(out)


def verify_null_space(
    a1: ImagePlane, a2: ImagePlane, method: DownsampleMethod, factor: int
) -> float:
    """Largest per-sample difference of the two images' LR projections."""
    if a1.shape != a2.shape:
        raise ValueError(f"size mismatch {a1.shape} vs {a2.shape}")
    d1 = downsample(a1, method, factor)
    d2 = downsample(a2, method, factor)
    return float(np.max(np.abs(d1.data - d2.data)))
