"""Complex Gabor kernels, filter banks and same-size convolution.

Kernel::

    G(x, y) = f^2 / (pi * gamma * eta) * exp(-(x'^2 + gamma * y'^2) / (2 sigma^2))
              * exp(j (2 pi f x' + phi))

    x' =  x cos(theta) + y sin(theta)
    y' = -x sin(theta) + y cos(theta)

``x`` runs along columns and ``y`` along rows; a kernel array is indexed
``values[y + (s - 1) // 2, x + (t - 1) // 2]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imaging import GrayImage

DEFAULT_F_MAX = 0.25
DEFAULT_SIGMA_F = 0.56
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class GaborParams:
    """Parameters of a single kernel.  ``s`` is the row count, ``t`` the column count."""

    f: float
    theta: float = 0.0
    phi: float = 0.0
    sigma: float = 1.0
    gamma: float = 1.0
    eta_aspect: float = 1.0
    s: int = 23
    t: int = 23

    def __post_init__(self):
        for name in ("f", "sigma", "gamma", "eta_aspect"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        for name in ("s", "t"):
            value = getattr(self, name)
            if int(value) != value or value < 1 or value % 2 == 0:
                raise ValueError(f"window size {name} must be a positive odd integer, got {value}")


@dataclass(frozen=True, eq=False)
class GaborKernel:
    params: GaborParams
    values: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class GaborBankConfig:
    """GFB(u, v, s, t) plus the parameters shared by every kernel in the bank.

    Scale ``a`` uses frequency ``f_max / sqrt(2)**a`` and envelope width
    ``sigma_f / f``; orientation ``b`` uses ``theta = b * pi / v``.
    """

    u: int = 5
    v: int = 8
    s: int = 23
    t: int = 23
    f_max: float = DEFAULT_F_MAX
    sigma_f: float = DEFAULT_SIGMA_F
    gamma: float = 1.0
    eta_aspect: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        if self.u < 1 or self.v < 1:
            raise ValueError(f"bank needs u >= 1 and v >= 1, got u={self.u}, v={self.v}")
        if not self.sigma_f > 0:
            raise ValueError("sigma_f must be positive")

    @property
    def size(self) -> int:
        return self.u * self.v

    def frequency(self, scale: int) -> float:
        return self.f_max / math.sqrt(2.0) ** scale

    def orientation(self, index: int) -> float:
        return index * math.pi / self.v


def kernel_value(params: GaborParams, x, y):
    """Evaluate the kernel formula at (possibly array-valued) offsets ``x``, ``y``."""
    ct, st = math.cos(params.theta), math.sin(params.theta)
    xr = x * ct + y * st
    yr = -x * st + y * ct
    scale = params.f ** 2 / (math.pi * params.gamma * params.eta_aspect)
    envelope = np.exp(-(xr ** 2 + params.gamma * yr ** 2) / (2.0 * params.sigma ** 2))
    carrier = np.exp(1j * (2.0 * math.pi * params.f * xr + params.phi))
    return scale * envelope * carrier


def make_kernel(params: GaborParams) -> GaborKernel:
    hs, ht = (params.s - 1) // 2, (params.t - 1) // 2
    y, x = np.mgrid[-hs:hs + 1, -ht:ht + 1].astype(np.float64)
    values = np.asarray(kernel_value(params, x, y), dtype=np.complex128)
    values.flags.writeable = False
    return GaborKernel(params, values)


def make_bank(config: GaborBankConfig) -> list[GaborKernel]:
    """Kernels in scale-major order: index ``a * v + b``."""
    bank = []
    for a in range(config.u):
        f = config.frequency(a)
        for b in range(config.v):
            bank.append(make_kernel(GaborParams(
                f=f,
                theta=config.orientation(b),
                phi=config.phi,
                sigma=config.sigma_f / f,
                gamma=config.gamma,
                eta_aspect=config.eta_aspect,
                s=config.s,
                t=config.t,
            )))
    return bank


def _as_pixels(image) -> np.ndarray:
    return image.pixels if isinstance(image, GrayImage) else np.asarray(image)


def convolve_bank(image, kernels) -> np.ndarray:
    """Convolve one image with several equally sized kernels.

    Zero padding, output cropped to the input size and centred on the
    kernel origin.  Returns a complex array of shape ``(len(kernels), H, W)``.
    """
    px = np.asarray(_as_pixels(image), dtype=np.float64)
    stack = np.stack([k.values if isinstance(k, GaborKernel) else np.asarray(k) for k in kernels])
    _, ks, kt = stack.shape
    hs, ht = (ks - 1) // 2, (kt - 1) // 2
    padded = np.pad(px, ((hs, ks - 1 - hs), (ht, kt - 1 - ht)))
    windows = sliding_window_view(padded, (ks, kt))
    h, w = px.shape
    # convolution = correlation with the point-reflected kernel
    flipped = stack[:, ::-1, ::-1].reshape(len(stack), -1).T
    out = np.empty((len(stack), h, w), dtype=np.complex128)
    rows_per_chunk = max(1, _CHUNK_ELEMENTS // (w * ks * kt))
    for r in range(0, h, rows_per_chunk):
        block = windows[r:r + rows_per_chunk]
        n = block.shape[0]
        res = block.reshape(n * w, ks * kt) @ flipped
        out[:, r:r + n, :] = res.T.reshape(len(stack), n, w)
    return out


def convolve(image, kernel) -> np.ndarray:
    """Same-size zero-padded convolution of ``image`` with one kernel (complex result)."""
    return convolve_bank(image, [kernel])[0]


def magnitude(response: np.ndarray) -> np.ndarray:
    return np.abs(response)
