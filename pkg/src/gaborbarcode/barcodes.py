"""Gabor (GBC) and Radon (RBC) barcodes.

A barcode is produced by thresholding transform-domain feature vectors at
their median and concatenating the resulting bit fragments.  Every barcode
carries a ``config_tag`` such as ``GBC(5,8,23,23)`` or ``RBC(4,128)`` that
fully determines how it was made; :func:`parse_tag` turns a tag back into
a descriptor so probes can be encoded the same way as an index.
"""
from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass, field, fields

import numpy as np

from .gabor import GaborBankConfig, convolve_bank, magnitude, make_bank
from .imaging import GrayImage, normalize

GBC = "GBC"
RBC = "RBC"
DEFAULT_SIDE = 32
DEFAULT_BINS = 128


class TagError(ValueError):
    """Raised for config tags that cannot be parsed."""


@dataclass(frozen=True, eq=False)
class Barcode:
    """Bit vector plus the descriptor that produced it."""

    bits: np.ndarray = field(repr=False)
    kind: str
    config_tag: str

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or bits.size == 0:
            raise ValueError("barcode bits must be a non-empty 1-D vector")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("barcode bits must be 0 or 1")
        bits = bits.astype(np.uint8)
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def length(self) -> int:
        return int(self.bits.size)

    def __len__(self):
        return self.length

    def __eq__(self, other):
        if not isinstance(other, Barcode):
            return NotImplemented
        return (self.kind, self.config_tag) == (other.kind, other.config_tag) and np.array_equal(
            self.bits, other.bits)

    @property
    def words(self) -> np.ndarray:
        """Packed form: 64 bits per little-endian word, LSB first, zero-padded tail."""
        return pack_bits(self.bits)

    @classmethod
    def from_words(cls, words, length: int, kind: str, config_tag: str) -> "Barcode":
        return cls(unpack_bits(words, length), kind, config_tag)

    def to_text(self) -> str:
        return f"{self.config_tag}:" + "".join("01"[b] for b in self.bits)

    @classmethod
    def from_text(cls, text: str) -> "Barcode":
        tag, sep, payload = text.strip().rpartition(":")
        if not sep or not payload or set(payload) - {"0", "1"}:
            raise ValueError("expected '<config_tag>:<bits>'")
        bits = np.frombuffer(payload.encode("ascii"), dtype=np.uint8) - ord("0")
        return cls(bits, tag[:3], tag)


def pack_bits(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    n_words = -(-bits.size // 64)
    packed = np.zeros(n_words * 8, dtype=np.uint8)
    raw = np.packbits(bits, bitorder="little")
    packed[:raw.size] = raw
    return packed.view("<u8")


def unpack_bits(words, length: int) -> np.ndarray:
    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    if raw.size * 8 < length:
        raise ValueError(f"{raw.size * 8} packed bits cannot hold length {length}")
    return np.unpackbits(raw, bitorder="little", count=length)


# ---------------------------------------------------------------- primitives

@dataclass(frozen=True)
class DownsampleSpec:
    """Column factor ``d1``, row factor ``d2``.

    ``mode="decimate"`` keeps every d-th sample starting at index 0;
    ``mode="mean"`` averages non-overlapping d2 x d1 blocks instead.
    """

    d1: int = 4
    d2: int = 4
    mode: str = "decimate"

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError(f"downsampling factors must be >= 1, got d1={self.d1}, d2={self.d2}")
        if self.mode not in ("decimate", "mean"):
            raise ValueError(f"unknown downsampling mode {self.mode!r}")


def downsample(feature_map: np.ndarray, spec: DownsampleSpec = DownsampleSpec()) -> np.ndarray:
    """Reduce a 2-D map by ``(d2, d1)`` and flatten it row-major."""
    fm = np.asarray(feature_map)
    rows, cols = fm.shape
    if rows % spec.d2 or cols % spec.d1:
        raise ValueError(f"map of shape {fm.shape} is not divisible by (d2={spec.d2}, d1={spec.d1})")
    if spec.mode == "mean":
        blocks = fm.reshape(rows // spec.d2, spec.d2, cols // spec.d1, spec.d1)
        return blocks.mean(axis=(1, 3)).ravel()
    return fm[::spec.d2, ::spec.d1].ravel()


def binarize_median(vec) -> np.ndarray:
    """``1`` where a value is at least the vector median, else ``0``."""
    v = np.asarray(vec, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot binarize an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector must be finite")
    return (v >= np.median(v)).astype(np.uint8)


@functools.lru_cache(maxsize=32)
def _bank_stack(config: GaborBankConfig):
    return make_bank(config)


def gabor_features(image: GrayImage, bank: GaborBankConfig,
                   spec: DownsampleSpec = DownsampleSpec()) -> np.ndarray:
    """Downsampled magnitude responses, one row per kernel in bank order."""
    responses = magnitude(convolve_bank(image, _bank_stack(bank)))
    return np.stack([downsample(r, spec) for r in responses])


def gbc(image: GrayImage, bank: GaborBankConfig = GaborBankConfig(),
        spec: DownsampleSpec = DownsampleSpec()) -> Barcode:
    """Gabor barcode of an image already normalized to a square power-of-two size."""
    if image.height != image.width:
        raise ValueError(f"GBC expects a normalized square image, got {image!r}")
    features = gabor_features(image, bank, spec)
    bits = np.concatenate([binarize_median(row) for row in features])
    desc = GaborDescriptor(bank, spec, side=image.height)
    return Barcode(bits, GBC, desc.tag)


@dataclass(frozen=True)
class RadonConfig:
    n_angles: int = 4
    bins: int = DEFAULT_BINS

    def __post_init__(self):
        if self.n_angles < 1 or self.bins < 1:
            raise ValueError(f"need n_angles >= 1 and bins >= 1, got {self.n_angles}, {self.bins}")

    def angles(self) -> np.ndarray:
        """Equispaced projection angles in radians over [0, pi)."""
        return np.arange(self.n_angles) * (math.pi / self.n_angles)


def radon_projection(image: GrayImage, theta: float) -> np.ndarray:
    """Discrete line sums along ``rho = x cos(theta) + y sin(theta)``.

    Pixel (row i, column j) sits at ``x = j - W // 2``, ``y = i - H // 2``
    and adds its intensity to the 1-pixel-wide bin nearest to its ``rho``.
    The accumulator spans every reachable bin, so its length depends only
    on the image size; unreachable bins stay exactly zero.
    """
    px = image.pixels
    h, w = px.shape
    y, x = np.mgrid[0:h, 0:w]
    x = x - w // 2
    y = y - h // 2
    reach = math.ceil(math.hypot(w // 2, h // 2))
    rho = x * math.cos(theta) + y * math.sin(theta)
    idx = np.floor(rho + 0.5).astype(np.intp) + reach
    return np.bincount(idx.ravel(), weights=px.ravel(), minlength=2 * reach + 1)


def resample(projection: np.ndarray, bins: int) -> np.ndarray:
    n = projection.size
    if n == bins:
        return projection.astype(np.float64)
    return np.interp(np.linspace(0.0, n - 1, bins), np.arange(n), projection)


def radon_projections(image: GrayImage, config: RadonConfig = RadonConfig(),
                      resampled: bool = True) -> list[np.ndarray]:
    """One projection per angle; linearly resampled to ``config.bins`` unless ``resampled=False``."""
    projections = [radon_projection(image, th) for th in config.angles()]
    if resampled:
        projections = [resample(p, config.bins) for p in projections]
    return projections


def threshold_nonzero_median(projection) -> np.ndarray:
    p = np.asarray(projection, dtype=np.float64)
    nonzero = p[p != 0]
    if nonzero.size == 0:
        return np.zeros(p.size, dtype=np.uint8)
    return ((p != 0) & (p >= np.median(nonzero))).astype(np.uint8)


def rbc(image: GrayImage, config: RadonConfig = RadonConfig()) -> Barcode:
    fragments = [threshold_nonzero_median(p) for p in radon_projections(image, config)]
    desc = RadonDescriptor(config, side=image.height if image.height == image.width else None)
    return Barcode(np.concatenate(fragments), RBC, desc.tag)


# ---------------------------------------------------------------- descriptors

@dataclass(frozen=True)
class GaborDescriptor:
    bank: GaborBankConfig = GaborBankConfig()
    downsample: DownsampleSpec = DownsampleSpec()
    side: int = DEFAULT_SIDE

    kind = GBC

    def __post_init__(self):
        if self.side % self.downsample.d1 or self.side % self.downsample.d2:
            raise ValueError(f"side {self.side} is not divisible by the downsampling factors")

    @property
    def length(self) -> int:
        b, d = self.bank, self.downsample
        return self.side * self.side * b.u * b.v // (d.d1 * d.d2)

    @property
    def tag(self) -> str:
        b, d = self.bank, self.downsample
        extras = _non_defaults(b, ("u", "v", "s", "t"))
        extras += _non_defaults(d)
        if self.side != DEFAULT_SIDE:
            extras.append(f"side={self.side}")
        head = f"{b.u},{b.v},{b.s},{b.t}"
        return f"GBC({head};{','.join(extras)})" if extras else f"GBC({head})"

    def validate(self) -> "GaborDescriptor":
        """Build the bank once so invalid kernel parameters fail early."""
        _bank_stack(self.bank)
        return self

    def encode(self, image: GrayImage) -> Barcode:
        return gbc(normalize(image, self.side, self.side), self.bank, self.downsample)


@dataclass(frozen=True)
class RadonDescriptor:
    radon: RadonConfig = RadonConfig()
    side: int | None = DEFAULT_SIDE

    kind = RBC

    @property
    def length(self) -> int:
        return self.radon.n_angles * self.radon.bins

    @property
    def tag(self) -> str:
        head = f"{self.radon.n_angles},{self.radon.bins}"
        if self.side != DEFAULT_SIDE:
            return f"RBC({head};side={self.side if self.side is not None else 'native'})"
        return f"RBC({head})"

    def validate(self) -> "RadonDescriptor":
        return self

    def encode(self, image: GrayImage) -> Barcode:
        if self.side is not None:
            image = normalize(image, self.side, self.side)
        return rbc(image, self.radon)


def _non_defaults(obj, skip=()) -> list[str]:
    out = []
    for f in fields(obj):
        if f.name in skip:
            continue
        value = getattr(obj, f.name)
        if value != f.default:
            out.append(f"{f.name}={value!r}" if isinstance(value, float) else f"{f.name}={value}")
    return out


_TAG = re.compile(r"^(GBC|RBC)\(([^;()]*)(?:;([^()]*))?\)$")


def parse_tag(tag: str):
    """Rebuild the descriptor that a ``config_tag`` describes."""
    m = _TAG.match(tag.strip())
    if m is None:
        raise TagError(f"malformed config tag {tag!r}")
    kind, head, tail = m.groups()
    try:
        nums = [int(x) for x in head.split(",")]
        extras = dict(kv.split("=", 1) for kv in tail.split(",")) if tail else {}
        if kind == GBC:
            if len(nums) != 4:
                raise TagError(f"GBC tag needs u,v,s,t: {tag!r}")
            side = int(extras.pop("side", DEFAULT_SIDE))
            bank_kw = {f.name: f.type for f in fields(GaborBankConfig)}
            ds_kw = {f.name for f in fields(DownsampleSpec)}
            bank_extra, ds_extra = {}, {}
            for key, value in extras.items():
                if key in ds_kw:
                    ds_extra[key] = value if key == "mode" else int(value)
                elif key in bank_kw and key not in ("u", "v", "s", "t"):
                    bank_extra[key] = float(value)
                else:
                    raise TagError(f"unknown GBC tag field {key!r}")
            bank = GaborBankConfig(*nums, **bank_extra)
            return GaborDescriptor(bank, DownsampleSpec(**ds_extra), side)
        if len(nums) != 2:
            raise TagError(f"RBC tag needs n_angles,bins: {tag!r}")
        side_text = extras.pop("side", str(DEFAULT_SIDE))
        if extras:
            raise TagError(f"unknown RBC tag fields {sorted(extras)}")
        side = None if side_text == "native" else int(side_text)
        return RadonDescriptor(RadonConfig(*nums), side)
    except TagError:
        raise
    except ValueError as exc:
        raise TagError(f"malformed config tag {tag!r}: {exc}") from exc
