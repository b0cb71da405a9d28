"""Null-space-aware fidelity metric for super-resolution results.

The score of a high-resolution candidate B against the original
low-resolution image a is the maximum center-cropped PSNR over a grid of
nuisance transforms applied to B: a 3x3 Gaussian blur (six sigmas), one
of six down-sampling kernels, and an integer translation within a search
radius. The grid is searched exhaustively; results are deterministic for
a given config, independent of worker count.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .image import ImagePlane, MotionVector, load_image
from .resample import DownsampleMethod, downsample_data

PEAK = 255.0

#: Blur standard deviations searched by default; 0.1 is numerically no blur.
DEFAULT_SIGMAS = (0.1, 0.5, 0.9, 1.3, 1.7, 2.1)
DEFAULT_METHODS = tuple(DownsampleMethod)
DEFAULT_RADIUS = 10
DEFAULT_BORDER = 20
DEFAULT_FACTOR = 3

#: Aggregation cap for infinite-PSNR entries (means stay well-defined).
DB_CAP = 100.0


def db_from_mse(mse: float) -> float:
    """PSNR in dB for peak 255; zero MSE maps to the distinguished inf."""
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


@dataclass(frozen=True)
class BlurKernel:
    """3x3 Gaussian tap weights, normalized to sum 1."""

    sigma: float
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (3, 3):
            raise ValueError(f"expected 3x3 kernel, got {w.shape}")
        w = w.view()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


def gaussian_kernel3(sigma: float) -> BlurKernel:
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d = np.array([-1.0, 0.0, 1.0])
    g = np.exp(-(d * d) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return BlurKernel(sigma, w / w.sum())


def convolve3_data(data: np.ndarray, kernel: BlurKernel) -> np.ndarray:
    # Kernel is symmetric, so correlate == convolve; 'nearest' replicates
    # the edge samples.
    return ndimage.correlate(data, kernel.weights, mode="nearest")


def convolve3(img: ImagePlane, kernel: BlurKernel) -> ImagePlane:
    """Same-size 3x3 convolution with replicate boundary padding."""
    return ImagePlane(convolve3_data(img.data, kernel))


def psnr_center(a: ImagePlane, b: ImagePlane, border: int) -> float:
    """PSNR over the interior of both images, excluding `border` pixels.

    Samples marked invalid (NaN) are excluded from the MSE.
    """
    if a.shape != b.shape:
        raise ValueError(f"size mismatch {a.shape} vs {b.shape}")
    h, w = a.shape
    if border < 0 or w <= 2 * border or h <= 2 * border:
        raise ValueError(f"image {w}x{h} too small for border {border}")
    ai = a.data[border : h - border, border : w - border]
    bi = b.data[border : h - border, border : w - border]
    diff = ai - bi
    d2 = diff * diff
    bad = np.isnan(d2)
    if bad.any():
        d2 = d2[~bad]
        if d2.size == 0:
            raise ValueError("no valid samples in comparison region")
    return db_from_mse(float(np.mean(d2)))


@dataclass(frozen=True)
class FidelitySearchConfig:
    sigmas: tuple[float, ...] = DEFAULT_SIGMAS
    methods: tuple[DownsampleMethod, ...] = DEFAULT_METHODS
    radius: int = DEFAULT_RADIUS
    border: int = DEFAULT_BORDER
    factor: int = DEFAULT_FACTOR

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.sigmas:
            raise ValueError("at least one sigma required")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError(f"sigmas must be positive: {self.sigmas}")
        if not self.methods:
            raise ValueError("at least one downsample method required")
        if self.radius < 0:
            raise ValueError(f"negative radius {self.radius}")
        if self.border <= self.radius:
            raise ValueError(
                f"border ({self.border}) must exceed translation radius "
                f"({self.radius}) so every compared sample is valid"
            )
        if int(self.factor) != self.factor or self.factor < 2:
            raise ValueError(f"factor must be an integer >= 2, got {self.factor}")

    @property
    def shift_count(self) -> int:
        return (2 * self.radius + 1) ** 2

    @property
    def evaluation_count(self) -> int:
        return len(self.sigmas) * len(self.methods) * self.shift_count


@dataclass(frozen=True)
class FidelityResult:
    fd_db: float
    best_sigma: float
    best_method: DownsampleMethod
    best_mv: MotionVector
    evaluations: int

    def to_json_dict(self) -> dict:
        return {
            "fd_db": "inf" if math.isinf(self.fd_db) else self.fd_db,
            "sigma": self.best_sigma,
            "method": self.best_method.value,
            "mv": [self.best_mv.dx, self.best_mv.dy],
            "evaluations": self.evaluations,
        }


def _shift_of_index(k: int, radius: int) -> MotionVector:
    # Row-major over the (2r+1)^2 grid starting at (-r, -r): dy outer, dx inner.
    n = 2 * radius + 1
    dy, dx = divmod(k, n)
    return MotionVector(dx - radius, dy - radius)


def _run_branch(state: dict, branch: int) -> tuple[int, float, int]:
    """Best (dB, shift index) over all translations of one (sigma, method)."""
    cfg: FidelitySearchConfig = state["cfg"]
    si, mi = divmod(branch, len(cfg.methods))
    cache = state.setdefault("blur_cache", {})
    blurred = cache.get(si)
    if blurred is None:
        blurred = convolve3_data(state["hr"], gaussian_kernel3(cfg.sigmas[si]))
        cache[si] = blurred
    cand = downsample_data(blurred, cfg.methods[mi], cfg.factor)
    a_int: np.ndarray = state["a_interior"]
    h, w = state["lr_shape"]
    b, r = cfg.border, cfg.radius
    buf = np.empty_like(a_int)
    best_db = -math.inf
    best_k = -1
    k = 0
    for dy in range(-r, r + 1):
        rows = cand[b - dy : h - b - dy]
        for dx in range(-r, r + 1):
            win = rows[:, b - dx : w - b - dx]
            np.subtract(a_int, win, out=buf)
            np.multiply(buf, buf, out=buf)
            db = db_from_mse(float(np.mean(buf)))
            if db > best_db:
                best_db = db
                best_k = k
            k += 1
    return branch, best_db, best_k


_WORKER_STATE: dict = {}


def _worker_init(hr: np.ndarray, a_interior: np.ndarray, lr_shape, cfg) -> None:
    _WORKER_STATE.clear()
    _WORKER_STATE.update(hr=hr, a_interior=a_interior, lr_shape=lr_shape, cfg=cfg)


def _worker_branch(branch: int) -> tuple[int, float, int]:
    return _run_branch(_WORKER_STATE, branch)


def fidelity(
    hr: ImagePlane, lr: ImagePlane, cfg: FidelitySearchConfig | None = None, jobs: int = 1
) -> FidelityResult:
    """Maximum center-cropped PSNR of lr against transformed projections of hr.

    Every (sigma, method, shift) triple is scored; the reported argmax is
    the first maximum in iteration order (sigma ascending, method in enum
    order, shifts row-major from (-r, -r)).
    """
    # jobs > 1 stages the inputs in module state for forked workers; calls
    # with jobs > 1 must not run concurrently from multiple threads.
    cfg = cfg or FidelitySearchConfig()
    expected = (math.ceil(hr.height / cfg.factor), math.ceil(hr.width / cfg.factor))
    if expected != lr.shape:
        raise ValueError(
            f"dimension mismatch: downsampling {hr.width}x{hr.height} by "
            f"{cfg.factor} gives {expected[1]}x{expected[0]}, but the reference "
            f"is {lr.width}x{lr.height}"
        )
    h, w = lr.shape
    if w <= 2 * cfg.border or h <= 2 * cfg.border:
        raise ValueError(f"reference {w}x{h} too small for border {cfg.border}")

    a_interior = np.ascontiguousarray(
        lr.data[cfg.border : h - cfg.border, cfg.border : w - cfg.border]
    )
    n_branches = len(cfg.sigmas) * len(cfg.methods)
    branches = range(n_branches)

    if jobs <= 1 or n_branches == 1:
        state = {"hr": hr.data, "a_interior": a_interior, "lr_shape": (h, w), "cfg": cfg}
        results = [_run_branch(state, i) for i in branches]
    else:
        try:
            ctx = multiprocessing.get_context("fork")
        except ValueError:
            ctx = multiprocessing.get_context()
        chunk = max(1, math.ceil(n_branches / jobs))
        if ctx.get_start_method() == "fork":
            # Children inherit the inputs copy-on-write; nothing is pickled
            # but the branch indices.
            _worker_init(hr.data, a_interior, (h, w), cfg)
            try:
                with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
                    results = list(pool.map(_worker_branch, branches, chunksize=chunk))
            finally:
                _WORKER_STATE.clear()
        else:
            with ProcessPoolExecutor(
                max_workers=jobs,
                mp_context=ctx,
                initializer=_worker_init,
                initargs=(hr.data, a_interior, (h, w), cfg),
            ) as pool:
                results = list(pool.map(_worker_branch, branches, chunksize=chunk))

    best_db = -math.inf
    best_branch = -1
    best_k = -1
    for branch, db, k in results:  # results arrive in branch order
        if db > best_db:
            best_db, best_branch, best_k = db, branch, k
    si, mi = divmod(best_branch, len(cfg.methods))
    return FidelityResult(
        fd_db=best_db,
        best_sigma=cfg.sigmas[si],
        best_method=cfg.methods[mi],
        best_mv=_shift_of_index(best_k, cfg.radius),
        evaluations=cfg.evaluation_count,
    )


@dataclass(frozen=True)
class BatchItem:
    hr_path: str
    lr_path: str
    result: FidelityResult | None = None
    error: str | None = None


def fidelity_batch(
    pairs: Sequence[tuple[str, str]],
    cfg: FidelitySearchConfig | None = None,
    jobs: int = 1,
) -> list[BatchItem]:
    """Score (HR path, LR path) pairs in order; per-item failures don't abort."""
    out: list[BatchItem] = []
    for hr_path, lr_path in pairs:
        try:
            hr = load_image(hr_path)
            lr = load_image(lr_path)
            result = fidelity(hr, lr, cfg, jobs=jobs)
        except (ValueError, OSError) as exc:
            out.append(BatchItem(str(hr_path), str(lr_path), error=str(exc)))
            continue
        out.append(BatchItem(str(hr_path), str(lr_path), result=result))
    return out


def summarize_db(values: Sequence[float], cap: float = DB_CAP) -> tuple[float, int]:
    """Mean with infinite/over-cap entries capped; returns (mean, n_capped)."""
    if not values:
        raise ValueError("no values to summarize")
    capped = sum(1 for v in values if v > cap)
    return sum(min(v, cap) for v in values) / len(values), capped
