"""Single-channel image container, color conversion, file I/O and geometry.

Everything downstream works on luma planes stored as float64. Values are
nominally in [0, 255] but analysis code never clamps; quantization happens
only when an image is exported to an 8-bit file.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# Full-range BT.601 luma weights (no studio-swing offset, peak stays 255).
LUMA_R = 0.299
LUMA_G = 0.587
LUMA_B = 0.114

# Sample value marking "no source pixel" after a translation. Comparison
# code excludes these samples instead of inventing content.
INVALID = np.nan


class DecodeError(ValueError):
    """An image file exists but cannot be decoded as 8-bit gray/RGB."""


@dataclass(frozen=True)
class MotionVector:
    """Integer translation in pixels. Positive dx moves content rightward."""

    dx: int
    dy: int


@dataclass(frozen=True)
class Region:
    """Axis-aligned pixel rectangle, must fit inside its parent image."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"degenerate region {self.width}x{self.height}")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"region origin ({self.x0},{self.y0}) outside parent")

    def check_inside(self, width: int, height: int) -> None:
        if self.x0 + self.width > width or self.y0 + self.height > height:
            raise ValueError(
                f"region {self} not contained in {width}x{height} image"
            )


@dataclass(frozen=True, eq=False)
class ImagePlane:
    """Immutable single-channel raster; data is row-major float64 (h, w)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected 2-D sample array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"degenerate image shape {arr.shape}")
        arr = arr.view()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def rgb_to_luma(r, g, b):
    """Full-range BT.601 luma; accepts scalars or arrays."""
    return LUMA_R * r + LUMA_G * g + LUMA_B * b


def load_image(path, fmt: str | None = None) -> ImagePlane:
    """Load an 8-bit PNG or binary PGM as a luma plane.

    RGB inputs are converted with rgb_to_luma; grayscale passes through
    unscaled. Other bit depths or color modes raise DecodeError rather
    than being coerced.
    """
    path = Path(path)
    if fmt is None:
        fmt = path.suffix.lower().lstrip(".")
    fmt = fmt.lower()
    if fmt == "pgm":
        return _load_pgm(path)
    if fmt == "png":
        return _load_png(path)
    raise ValueError(f"unsupported image format {fmt!r} for {path}")


def _load_png(path: Path) -> ImagePlane:
    try:
        with Image.open(path) as img:
            mode = img.mode
            if mode not in ("L", "RGB"):
                raise DecodeError(
                    f"{path}: unsupported mode {mode!r}, need 8-bit gray or RGB"
                )
            arr = np.asarray(img, dtype=np.float64)
    except (UnidentifiedImageError, OSError) as exc:
        raise DecodeError(f"{path}: decode failure: {exc}") from exc
    if arr.ndim == 3:
        arr = rgb_to_luma(arr[:, :, 0], arr[:, :, 1], arr[:, :, 2])
    return ImagePlane(arr)


def _load_pgm(path: Path) -> ImagePlane:
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DecodeError(f"{path}: decode failure: {exc}") from exc
    return decode_pgm(blob, name=str(path))


def decode_pgm(blob: bytes, name: str = "<bytes>") -> ImagePlane:
    """Parse a binary (P5) PGM. Only maxval <= 255 is accepted."""
    header, offset = _pgm_header(blob, name)
    magic, width, height, maxval = header
    if magic != b"P5":
        raise DecodeError(f"{name}: decode failure: not a binary PGM (magic {magic!r})")
    if maxval > 255:
        raise DecodeError(f"{name}: unsupported bit depth (maxval {maxval})")
    n = width * height
    pixels = np.frombuffer(blob, dtype=np.uint8, count=-1, offset=offset)
    if pixels.size < n:
        raise DecodeError(f"{name}: decode failure: truncated pixel data")
    return ImagePlane(pixels[:n].reshape(height, width).astype(np.float64))


def _pgm_header(blob: bytes, name: str):
    # Header = magic, width, height, maxval separated by whitespace;
    # '#' starts a comment running to end of line.
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4:
        if i >= len(blob):
            raise DecodeError(f"{name}: decode failure: truncated header")
        c = blob[i : i + 1]
        if c == b"#":
            while i < len(blob) and blob[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(blob) and not blob[j : j + 1].isspace() and blob[j : j + 1] != b"#":
                j += 1
            tokens.append(blob[i:j])
            i = j
    i += 1  # single whitespace byte after maxval
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise DecodeError(f"{name}: decode failure: bad header token") from exc
    if width < 1 or height < 1:
        raise DecodeError(f"{name}: decode failure: degenerate size {width}x{height}")
    return (tokens[0], width, height, maxval), i


def quantize_u8(img: ImagePlane) -> np.ndarray:
    """Round and clamp samples into uint8; the only place clamping happens."""
    return np.clip(np.rint(img.data), 0, 255).astype(np.uint8)


def save_pgm(img: ImagePlane, path) -> None:
    """Write binary PGM (P5, maxval 255); bit-exact for integral 8-bit data."""
    raw = quantize_u8(img)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + raw.tobytes())


def png_bytes(img: ImagePlane) -> bytes:
    """Encode as an 8-bit grayscale PNG."""
    buf = io.BytesIO()
    Image.fromarray(quantize_u8(img), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: ImagePlane, path) -> None:
    Path(path).write_bytes(png_bytes(img))


def image_size(path) -> tuple[int, int]:
    """(width, height) from the file header without decoding pixel data."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        header, _ = _pgm_header(path.read_bytes(), str(path))
        return header[1], header[2]
    try:
        with Image.open(path) as img:
            return img.size
    except (UnidentifiedImageError, OSError) as exc:
        raise DecodeError(f"{path}: decode failure: {exc}") from exc


def crop_center(img: ImagePlane, border: int) -> ImagePlane:
    """Interior of the image with `border` pixels removed on every side."""
    if border < 0:
        raise ValueError(f"negative border {border}")
    if border == 0:
        return ImagePlane(img.data)
    if img.width <= 2 * border or img.height <= 2 * border:
        raise ValueError(
            f"image {img.width}x{img.height} too small for border {border}"
        )
    region = Region(border, border, img.width - 2 * border, img.height - 2 * border)
    region.check_inside(img.width, img.height)
    return ImagePlane(
        img.data[region.y0 : region.y0 + region.height, region.x0 : region.x0 + region.width]
    )


def translate(img: ImagePlane, u: MotionVector) -> ImagePlane:
    """Shift by u: output(x, y) = input(x - dx, y - dy).

    Positions whose source falls outside the image are filled with the
    INVALID marker; comparisons exclude them.
    """
    h, w = img.shape
    dx, dy = int(u.dx), int(u.dy)
    if abs(dx) >= w or abs(dy) >= h:
        return ImagePlane(np.full((h, w), INVALID))
    out = np.full((h, w), INVALID)
    out[max(0, dy) : h + min(0, dy), max(0, dx) : w + min(0, dx)] = img.data[
        max(0, -dy) : h + min(0, -dy), max(0, -dx) : w + min(0, -dx)
    ]
    return ImagePlane(out)
