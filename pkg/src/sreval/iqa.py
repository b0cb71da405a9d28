"""Full-reference quality metrics and the external-score adapter.

PSNR, SSIM and UQI are computed natively on luma planes. Scores produced
by metrics we do not implement (no-reference models, wavelet-domain FR
metrics) enter through a CSV adapter and are compared on equal footing.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import ndimage

from .fidelity import db_from_mse
from .image import ImagePlane

HIGHER = "higher"
LOWER = "lower"
_POLARITIES = (HIGHER, LOWER)


class Preference(Enum):
    LEFT = "left"
    RIGHT = "right"
    TIE = "tie"


@dataclass(frozen=True)
class MetricScore:
    metric: str
    image: str
    value: float
    polarity: str = HIGHER

    def __post_init__(self) -> None:
        if self.polarity not in _POLARITIES:
            raise ValueError(
                f"unknown polarity {self.polarity!r}, expected one of {_POLARITIES}"
            )
        if math.isnan(self.value):
            raise ValueError(f"score for {self.metric}/{self.image} is NaN")


def psnr(a: ImagePlane, b: ImagePlane) -> float:
    """Whole-image PSNR with peak 255 (no border exclusion)."""
    if a.shape != b.shape:
        raise ValueError(f"size mismatch {a.shape} vs {b.shape}")
    diff = a.data - b.data
    return db_from_mse(float(np.mean(diff * diff)))


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    d = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(d * d) / (2.0 * sigma * sigma))
    return w / w.sum()


def _windowed(data: np.ndarray, w: np.ndarray, margin: int) -> np.ndarray:
    # Separable weighted mean; the margin crop keeps only windows fully
    # inside the image, so the padding mode never matters.
    f = ndimage.correlate1d(data, w, axis=0, mode="nearest")
    f = ndimage.correlate1d(f, w, axis=1, mode="nearest")
    return f[margin:-margin, margin:-margin]


def ssim(a: ImagePlane, b: ImagePlane) -> float:
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), valid windows only."""
    if a.shape != b.shape:
        raise ValueError(f"size mismatch {a.shape} vs {b.shape}")
    h, w = a.shape
    if h < 11 or w < 11:
        raise ValueError(f"image {w}x{h} smaller than the 11x11 SSIM window")
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    win = _gaussian_window()
    x, y = a.data, b.data
    mu_x = _windowed(x, win, 5)
    mu_y = _windowed(y, win, 5)
    sxx = _windowed(x * x, win, 5) - mu_x * mu_x
    syy = _windowed(y * y, win, 5) - mu_y * mu_y
    sxy = _windowed(x * y, win, 5) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def _window_sums(data: np.ndarray, k: int) -> np.ndarray:
    # Sliding k x k sums of every window position via an integral image.
    ii = np.zeros((data.shape[0] + 1, data.shape[1] + 1))
    np.cumsum(np.cumsum(data, axis=0), axis=1, out=ii[1:, 1:])
    return ii[k:, k:] - ii[:-k, k:] - ii[k:, :-k] + ii[:-k, :-k]


def uqi(a: ImagePlane, b: ImagePlane) -> float:
    """Universal quality index: SSIM with no stabilizers, 8x8 uniform window.

    Windows with a zero denominator are undefined; they are skipped. If
    every window is undefined (constant vs constant) this raises.
    """
    if a.shape != b.shape:
        raise ValueError(f"size mismatch {a.shape} vs {b.shape}")
    h, w = a.shape
    k = 8
    if h < k or w < k:
        raise ValueError(f"image {w}x{h} smaller than the {k}x{k} UQI window")
    n = float(k * k)
    x, y = a.data, b.data
    mu_x = _window_sums(x, k) / n
    mu_y = _window_sums(y, k) / n
    sxx = _window_sums(x * x, k) / n - mu_x * mu_x
    syy = _window_sums(y * y, k) / n - mu_y * mu_y
    sxy = _window_sums(x * y, k) / n - mu_x * mu_y
    num = (2.0 * mu_x * mu_y) * (2.0 * sxy)
    den = (mu_x * mu_x + mu_y * mu_y) * (sxx + syy)
    defined = den != 0.0
    if not defined.any():
        raise ValueError("no valid windows: both images are constant")
    return float(np.mean(num[defined] / den[defined]))


def metric_preference(
    left: MetricScore, right: MetricScore, epsilon: float = 0.0
) -> Preference:
    """Pick the side whose score is better after polarity normalization."""
    if left.metric != right.metric:
        raise ValueError(f"metric mismatch: {left.metric} vs {right.metric}")
    if left.polarity != right.polarity:
        raise ValueError(f"polarity mismatch for metric {left.metric}")
    sign = 1.0 if left.polarity == HIGHER else -1.0
    lv, rv = sign * left.value, sign * right.value
    if lv == rv or abs(lv - rv) <= epsilon:
        return Preference.TIE
    return Preference.LEFT if lv > rv else Preference.RIGHT


_HEADER = ["metric", "image", "value", "polarity"]


def load_external_scores(path) -> list[MetricScore]:
    """Read scores from CSV with header metric,image,value,polarity."""
    path = Path(path)
    scores: list[MetricScore] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header {_HEADER}") from None
        if [c.strip() for c in header] != _HEADER:
            raise ValueError(f"{path}: bad header {header!r}, expected {_HEADER}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            metric, image, raw_value, polarity = (c.strip() for c in row)
            try:
                value = float(raw_value)
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: bad value {raw_value!r}"
                ) from None
            try:
                scores.append(MetricScore(metric, image, value, polarity))
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return scores


def save_scores_csv(scores, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_HEADER)
        for s in scores:
            writer.writerow([s.metric, s.image, repr(s.value), s.polarity])


def save_scores_json(scores, path) -> None:
    records = [
        {"metric": s.metric, "image": s.image, "value": "inf" if math.isinf(s.value) else s.value, "polarity": s.polarity}
        for s in scores
    ]
    Path(path).write_text(json.dumps(records, indent=2) + "\n")
