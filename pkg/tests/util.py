"""Shared helpers for the test suite."""

import numpy as np

from sreval.image import ImagePlane


def random_plane(rng, height, width, lo=0.0, hi=255.0) -> ImagePlane:
    return ImagePlane(rng.uniform(lo, hi, (height, width)))


def random_u8_plane(rng, height, width) -> ImagePlane:
    return ImagePlane(rng.integers(0, 256, (height, width)).astype(np.float64))


def smooth_plane(rng, height, width) -> ImagePlane:
    """Band-limited test image: random field blurred by a box, rescaled to [0,255]."""
    raw = rng.uniform(0.0, 1.0, (height + 8, width + 8))
    k = np.ones(9) / 9.0
    for axis in (0, 1):
        raw = np.apply_along_axis(lambda v: np.convolve(v, k, mode="same"), axis, raw)
    raw = raw[4 : height + 4, 4 : width + 4]
    raw = (raw - raw.min()) / max(float(np.ptp(raw)), 1e-12)
    return ImagePlane(raw * 255.0)
