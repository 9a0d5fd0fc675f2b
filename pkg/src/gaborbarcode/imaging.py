"""Image loading and size normalization.

All descriptor paths consume a :class:`GrayImage`: a 2-D float64 grid with
intensities in ``[0, 1]``.  Binary PGM (P5) is parsed directly; PNG goes
through Pillow.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageError(ValueError):
    """Raised for malformed, empty or unsupported image data."""


class UnsupportedFormatError(ImageError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major grayscale image with intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ImageError(f"expected a non-empty 2-D pixel grid, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ImageError("pixel values must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ImageError("pixel values must lie in [0, 1]")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


_PGM_HEADER = re.compile(rb"\AP5(?:\s+|#[^\n]*\n)+?(\d+)(?:\s+|#[^\n]*\n)+?(\d+)"
                         rb"(?:\s+|#[^\n]*\n)+?(\d+)\s")


def _parse_pgm(data: bytes) -> np.ndarray:
    m = _PGM_HEADER.match(data)
    if m is None:
        raise ImageError("malformed PGM header")
    width, height, maxval = (int(g) for g in m.groups())
    if width == 0 or height == 0:
        raise ImageError("zero-dimension image")
    if not 0 < maxval < 65536:
        raise ImageError(f"invalid PGM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    body = data[m.end():]
    if len(body) < count * dtype.itemsize:
        raise ImageError("truncated PGM raster")
    raw = np.frombuffer(body, dtype=dtype, count=count).reshape(height, width)
    return np.minimum(raw.astype(np.float64) / maxval, 1.0)


def _parse_pil(path) -> np.ndarray:
    with Image.open(path) as im:
        im.load()
        if im.width == 0 or im.height == 0:
            raise ImageError("zero-dimension image")
        mode = im.mode
        if mode == "P":
            im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            mode = im.mode
        if mode == "1":
            return np.asarray(im, dtype=np.float64)
        if mode in ("L", "LA"):
            return np.asarray(im.getchannel("L"), dtype=np.float64) / 255.0
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            # Pillow widens 16-bit PNG to mode "I"
            return np.clip(np.asarray(im, dtype=np.float64) / 65535.0, 0.0, 1.0)
        if mode in ("RGB", "RGBA"):
            rgb = np.asarray(im, dtype=np.float64)[..., :3] / 255.0
            return np.clip(rgb @ np.array(LUMA_WEIGHTS), 0.0, 1.0)
        raise UnsupportedFormatError(f"unsupported image mode {mode!r}")


def load_image(path: str | os.PathLike) -> GrayImage:
    """Read a binary PGM or PNG file as a :class:`GrayImage`.

    Colour inputs are reduced with fixed luma weights; integer samples are
    divided by the format maximum.  Raises ``OSError`` for I/O failures and
    :class:`ImageError` for bad content.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P5":
        return GrayImage(_parse_pgm(data))
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return GrayImage(_parse_pil(path))
    raise UnsupportedFormatError(f"{os.fspath(path)}: only binary PGM and PNG are supported")


def save_pgm(image: GrayImage, path: str | os.PathLike) -> None:
    """Write an 8-bit binary PGM (used for fixtures and synthetic datasets)."""
    raw = np.rint(image.pixels * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (image.width, image.height))
        fh.write(raw.tobytes())


def _is_power_of_two(n: int) -> bool:
    return n > 1 and n & (n - 1) == 0


def _bilinear_axis(n_in: int, n_out: int):
    # half-pixel centres, edge samples clamped
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def normalize(image: GrayImage, rows: int = 32, cols: int = 32) -> GrayImage:
    """Resize ``image`` to ``rows x cols`` with bilinear interpolation.

    Both sides must be equal powers of two (2, 4, ..., 32, ...).  Images
    already at the target size are returned unchanged.
    """
    if rows != cols or not _is_power_of_two(rows):
        raise ValueError(f"target size must be square with a power-of-two side, got {rows}x{cols}")
    if image.height == rows and image.width == cols:
        return image
    px = image.pixels
    r0, r1, wr = _bilinear_axis(image.height, rows)
    c0, c1, wc = _bilinear_axis(image.width, cols)
    top = px[r0][:, c0] * (1 - wc) + px[r0][:, c1] * wc
    bottom = px[r1][:, c0] * (1 - wc) + px[r1][:, c1] * wc
    out = top * (1 - wr)[:, None] + bottom * wr[:, None]
    return GrayImage(np.clip(out, 0.0, 1.0))
