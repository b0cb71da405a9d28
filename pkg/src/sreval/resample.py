"""Separable resampling with MATLAB-imresize semantics.

Down-sampling supports six kernels (bicubic, bilinear, nearest, box,
lanczos2, lanczos3). All methods except nearest are antialiased: the
kernel is stretched by the scale factor and the sampled tap weights are
renormalized to sum 1 per output pixel. Output pixel centers map to
source coordinates via x_src = (x_out + 0.5) * factor - 0.5, and source
indexing clamps at the edges (replicate padding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .image import ImagePlane


class DownsampleMethod(Enum):
    BICUBIC = "bicubic"
    BILINEAR = "bilinear"
    NEAREST = "nearest"
    BOX = "box"
    LANCZOS2 = "lanczos2"
    LANCZOS3 = "lanczos3"

    @classmethod
    def from_name(cls, name: str) -> "DownsampleMethod":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(
                f"unknown downsample method {name!r}; "
                f"choose from {[m.value for m in cls]}"
            ) from None


def _cubic(x: np.ndarray) -> np.ndarray:
    # Keys cubic, a = -0.5. Interpolating, C1-continuous, support 2.
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    inner = 1.5 * ax3 - 2.5 * ax2 + 1.0
    outer = -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0
    return np.where(ax <= 1.0, inner, np.where(ax < 2.0, outer, 0.0))


def _triangle(x: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(x))


def _box(x: np.ndarray) -> np.ndarray:
    # Half-open support matches MATLAB: (-0.5 <= x) & (x < 0.5).
    return np.where((x >= -0.5) & (x < 0.5), 1.0, 0.0)


def _lanczos(x: np.ndarray, lobes: int) -> np.ndarray:
    return np.where(np.abs(x) < lobes, np.sinc(x) * np.sinc(x / lobes), 0.0)


def _lanczos2(x: np.ndarray) -> np.ndarray:
    return _lanczos(x, 2)


def _lanczos3(x: np.ndarray) -> np.ndarray:
    return _lanczos(x, 3)


@dataclass(frozen=True)
class ResampleKernel:
    """Compact-support weight function over continuous offsets."""

    support: float
    weight: Callable[[np.ndarray], np.ndarray]


_KERNELS: dict[DownsampleMethod, ResampleKernel] = {
    DownsampleMethod.BICUBIC: ResampleKernel(2.0, _cubic),
    DownsampleMethod.BILINEAR: ResampleKernel(1.0, _triangle),
    DownsampleMethod.NEAREST: ResampleKernel(0.5, _box),
    DownsampleMethod.BOX: ResampleKernel(0.5, _box),
    DownsampleMethod.LANCZOS2: ResampleKernel(2.0, _lanczos2),
    DownsampleMethod.LANCZOS3: ResampleKernel(3.0, _lanczos3),
}


def kernel_for(method: DownsampleMethod) -> ResampleKernel:
    return _KERNELS[method]


def kernel_weight(method: DownsampleMethod, x) -> np.ndarray:
    """Canonical (unstretched) kernel value at continuous offset x."""
    return kernel_for(method).weight(np.asarray(x, dtype=np.float64))


def _contributions(
    in_len: int,
    out_len: int,
    factor: float,
    kernel: ResampleKernel,
    antialias: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-output-pixel tap weights and clamped source indices."""
    u = (np.arange(out_len) + 0.5) * factor - 0.5
    if antialias and factor > 1:
        half = kernel.support * factor
        stretch = 1.0 / factor
    else:
        half = kernel.support
        stretch = 1.0
    left = np.floor(u - half).astype(np.int64)
    taps = int(math.ceil(2.0 * half)) + 2
    idx = left[:, None] + np.arange(taps)[None, :]
    weights = kernel.weight((u[:, None] - idx) * stretch)
    weights = weights / weights.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, in_len - 1)
    return weights, idx


def _resample_axis1(data: np.ndarray, weights: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # out[:, o] = sum_p data[:, idx[o, p]] * weights[o, p], accumulated in
    # ascending tap order for run-to-run determinism.
    out = np.zeros((data.shape[0], idx.shape[0]))
    for p in range(idx.shape[1]):
        out += data[:, idx[:, p]] * weights[None, :, p]
    return out


def resample_data(
    data: np.ndarray,
    out_shape: tuple[int, int],
    factor: float,
    kernel: ResampleKernel,
    antialias: bool,
) -> np.ndarray:
    """Row pass then column pass over a raw (h, w) array."""
    out_h, out_w = out_shape
    w_x, idx_x = _contributions(data.shape[1], out_w, factor, kernel, antialias)
    tmp = _resample_axis1(data, w_x, idx_x)
    w_y, idx_y = _contributions(data.shape[0], out_h, factor, kernel, antialias)
    return _resample_axis1(tmp.T, w_y, idx_y).T


def downsample_data(data: np.ndarray, method: DownsampleMethod, factor: int) -> np.ndarray:
    if int(factor) != factor or factor < 2:
        raise ValueError(f"downsample factor must be an integer >= 2, got {factor}")
    h, w = data.shape
    if h < factor or w < factor:
        raise ValueError(f"image {w}x{h} degenerate for factor {factor}")
    out_shape = (math.ceil(h / factor), math.ceil(w / factor))
    antialias = method is not DownsampleMethod.NEAREST
    return resample_data(data, out_shape, float(factor), kernel_for(method), antialias)


def downsample(img: ImagePlane, method: DownsampleMethod, factor: int) -> ImagePlane:
    """Shrink by an integer factor; output size is ceil(input / factor)."""
    return ImagePlane(downsample_data(img.data, method, factor))


def upsample_bicubic(img: ImagePlane, factor: int) -> ImagePlane:
    """Enlarge by an integer factor with Keys cubic interpolation.

    No antialiasing (upscaling), replicate boundary. This is the built-in
    baseline SR method.
    """
    if int(factor) != factor or factor < 2:
        raise ValueError(f"upsample factor must be an integer >= 2, got {factor}")
    h, w = img.shape
    out = resample_data(
        img.data,
        (h * factor, w * factor),
        1.0 / factor,
        kernel_for(DownsampleMethod.BICUBIC),
        antialias=False,
    )
    return ImagePlane(out)
