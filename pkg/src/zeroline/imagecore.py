"""Grayscale image container, PGM P5 codec, sampling, warping, annotation.

All pipeline stages exchange 8-bit grayscale images. PGM P5 is the
interchange format because it round-trips bit-exactly; PNG decoding is
offered only for ingesting photographs at the command-line boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .errors import (
    MalformedHeaderError,
    OutOfBoundsError,
    PgmError,
    SingularHomographyError,
    TruncatedRasterError,
    UnsupportedMaxvalError,
)

if TYPE_CHECKING:
    from .geometry import BBox, Homography

# BT.601 luma weights, applied with round-half-up when flattening color PNGs.
_LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Box outline intensities by label when annotating results onto an image.
DEFAULT_ANNOTATION_INTENSITIES = {"new": 255, "prior": 128}


class Point2(NamedTuple):
    """A 2D point in pixel coordinates (x right, y down)."""

    x: float
    y: float


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster, row-major, indexed pixels[y, x]."""

    pixels: np.ndarray

    def __post_init__(self):
        if not isinstance(self.pixels, np.ndarray):
            raise TypeError("pixels must be a numpy array")
        if self.pixels.ndim != 2:
            raise ValueError(f"expected a 2D array, got {self.pixels.ndim}D")
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {self.pixels.dtype}")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError("image dimensions must be at least 1x1")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_array(cls, array) -> "GrayImage":
        """Build from any integer array with values in [0, 255]."""
        arr = np.asarray(array)
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError("pixel array must have an integer dtype")
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        return cls(np.ascontiguousarray(arr))

    def copy(self) -> "GrayImage":
        return GrayImage(self.pixels.copy())


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise MalformedHeaderError("unexpected end of header")
    return data[start:pos], pos


def _parse_int_token(token: bytes, what: str) -> int:
    if not token.isdigit():
        raise MalformedHeaderError(f"non-numeric {what} field: {token!r}")
    return int(token)


def load_pgm(path: str | Path) -> GrayImage:
    """Read a binary PGM (P5, maxval 255) file."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise MalformedHeaderError("missing P5 magic")
    pos = 2
    token, pos = _read_token(data, pos)
    width = _parse_int_token(token, "width")
    token, pos = _read_token(data, pos)
    height = _parse_int_token(token, "height")
    token, pos = _read_token(data, pos)
    maxval = _parse_int_token(token, "maxval")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"invalid dimensions {width}x{height}")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedHeaderError("missing whitespace before raster")
    raster = data[pos + 1 :]
    expected = width * height
    if len(raster) < expected:
        raise TruncatedRasterError(
            f"raster has {len(raster)} bytes, expected {expected}"
        )
    if len(raster) > expected:
        raise PgmError(f"{len(raster) - expected} trailing bytes after raster")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels.copy())


def save_pgm(img: GrayImage, path: str | Path) -> None:
    """Write a binary PGM: header "P5\\n<w> <h>\\n255\\n" then raw rows."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())


def load_image(path: str | Path) -> GrayImage:
    """Load PGM directly or flatten a PNG through BT.601 luma.

    PNG support exists for photographs entering through the CLI; the
    library core itself only ever exchanges PGM.
    """
    p = Path(path)
    if p.suffix.lower() == ".png":
        from PIL import Image

        with Image.open(p) as im:
            if im.mode == "L":
                return GrayImage(np.asarray(im, dtype=np.uint8).copy())
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
        luma = (
            rgb[:, :, 0] * _LUMA_WEIGHTS[0]
            + rgb[:, :, 1] * _LUMA_WEIGHTS[1]
            + rgb[:, :, 2] * _LUMA_WEIGHTS[2]
        )
        return GrayImage(np.floor(luma + 0.5).astype(np.uint8))
    return load_pgm(p)


def bilinear_sample(img: GrayImage, p: Point2) -> float:
    """Bilinearly interpolate intensity at a subpixel position."""
    w, h = img.width, img.height
    x, y = float(p[0]), float(p[1])
    if not (0.0 <= x <= w - 1 and 0.0 <= y <= h - 1):
        raise OutOfBoundsError(f"sample position {p} outside [0,{w-1}]x[0,{h-1}]")
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    wx = x - x0
    wy = y - y0
    px = img.pixels
    top = (1.0 - wx) * px[y0, x0] + wx * px[y0, x1]
    bot = (1.0 - wx) * px[y1, x0] + wx * px[y1, x1]
    return (1.0 - wy) * top + wy * bot


def _bilinear_grid(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized bilinear sampling at in-bounds float positions."""
    h, w = pixels.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = xs - x0
    wy = ys - y0
    px = pixels.astype(np.float64)
    top = (1.0 - wx) * px[y0, x0] + wx * px[y0, x1]
    bot = (1.0 - wx) * px[y1, x0] + wx * px[y1, x1]
    return (1.0 - wy) * top + wy * bot


def warp_perspective(img: GrayImage, h: "Homography", out_w: int, out_h: int) -> GrayImage:
    """Resample img into an out_w x out_h frame through homography h.

    h maps source coordinates to destination coordinates; each output
    pixel is pulled from the source via the inverse map with bilinear
    interpolation. Output pixels that fall outside the source are 0.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be positive")
    m = np.asarray(h.matrix, dtype=np.float64)
    if abs(np.linalg.det(m)) <= 1e-12:
        raise SingularHomographyError("cannot invert homography with |det| <= 1e-12")
    inv = np.linalg.inv(m)

    us, vs = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    denom = inv[2, 0] * us + inv[2, 1] * vs + inv[2, 2]
    # Guard w ~ 0: those pixels cannot be pulled from a finite source point.
    safe = np.abs(denom) > 1e-12
    denom_safe = np.where(safe, denom, 1.0)
    xs = (inv[0, 0] * us + inv[0, 1] * vs + inv[0, 2]) / denom_safe
    ys = (inv[1, 0] * us + inv[1, 1] * vs + inv[1, 2]) / denom_safe

    inside = safe & (xs >= 0) & (xs <= img.width - 1) & (ys >= 0) & (ys <= img.height - 1)
    out = np.zeros((out_h, out_w), dtype=np.uint8)
    if np.any(inside):
        vals = _bilinear_grid(img.pixels, xs[inside], ys[inside])
        out[inside] = np.clip(np.floor(vals + 0.5), 0, 255).astype(np.uint8)
    return GrayImage(out)


def annotate(
    img: GrayImage,
    boxes: list[tuple["BBox", str]],
    intensities: dict[str, int] | None = None,
) -> GrayImage:
    """Burn 1-px box outlines into a copy of img, intensity chosen per label."""
    levels = DEFAULT_ANNOTATION_INTENSITIES if intensities is None else intensities
    out = img.pixels.copy()
    h, w = out.shape
    for box, label in boxes:
        if label not in levels:
            raise ValueError(f"no annotation intensity configured for label {label!r}")
        value = levels[label]
        x0 = int(math.floor(box.x_min + 0.5))
        y0 = int(math.floor(box.y_min + 0.5))
        x1 = int(math.floor(box.x_max + 0.5))
        y1 = int(math.floor(box.y_max + 0.5))
        cx0, cx1 = max(x0, 0), min(x1, w - 1)
        cy0, cy1 = max(y0, 0), min(y1, h - 1)
        if cx0 > cx1 or cy0 > cy1:
            continue
        if 0 <= y0 < h:
            out[y0, cx0 : cx1 + 1] = value
        if 0 <= y1 < h:
            out[y1, cx0 : cx1 + 1] = value
        if 0 <= x0 < w:
            out[cy0 : cy1 + 1, x0] = value
        if 0 <= x1 < w:
            out[cy0 : cy1 + 1, x1] = value
    return GrayImage(out)
