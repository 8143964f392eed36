"""Classical full-reference metrics and scalar loss formulas.

Intensities are in [0, 1], so PSNR uses a peak of 1.0 and SSIM a dynamic
range of 1.0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ImageSizeError, ParameterError
from .image import ImageLike, as_array, require_same_shape
from .sharpness import DEFAULT_PATCH_SIZE, compute_q
from .synth import gaussian_kernel1d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

BASE_LOSSES = ("l1", "l1+freq")


def _pair(a: ImageLike, b: ImageLike):
    x, y = as_array(a), as_array(b)
    require_same_shape(x, y)
    return x, y


def mse(a: ImageLike, b: ImageLike) -> float:
    x, y = _pair(a, b)
    d = x - y
    return float(np.mean(d * d))


def psnr(a: ImageLike, b: ImageLike) -> float:
    """Uncapped PSNR in dB; ``math.inf`` for identical images."""
    err = mse(a, b)
    if err == 0:
        return math.inf
    return -10.0 * math.log10(err)


def ssim(a: ImageLike, b: ImageLike) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5) over the valid region."""
    x, y = _pair(a, b)
    if min(x.shape) < SSIM_WINDOW:
        raise ImageSizeError(
            f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, "
            f"got {x.shape[1]}x{x.shape[0]}"
        )
    w = gaussian_kernel1d(SSIM_WINDOW, SSIM_SIGMA)
    pad = SSIM_WINDOW // 2

    def filt(arr):
        out = correlate1d(arr, w, axis=0, mode="nearest")
        out = correlate1d(out, w, axis=1, mode="nearest")
        return out[pad:-pad, pad:-pad]

    mu_x, mu_y = filt(x), filt(y)
    sxx = filt(x * x) - mu_x * mu_x
    syy = filt(y * y) - mu_y * mu_y
    sxy = filt(x * y) - mu_x * mu_y
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def l1_loss(a: ImageLike, b: ImageLike) -> float:
    x, y = _pair(a, b)
    return float(np.mean(np.abs(x - y)))


def freq_loss(a: ImageLike, b: ImageLike) -> float:
    """Mean magnitude of the difference between the two unnormalised 2-D DFTs."""
    x, y = _pair(a, b)
    return float(np.mean(np.abs(np.fft.fft2(x) - np.fft.fft2(y))))


@dataclass(frozen=True)
class LossParams:
    beta: float = 0.1
    lambda_freq: float = 0.1
    k: int = DEFAULT_PATCH_SIZE
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.beta < 0:
            raise ParameterError(f"beta must be >= 0, got {self.beta}")
        if self.lambda_freq < 0:
            raise ParameterError(f"lambda_freq must be >= 0, got {self.lambda_freq}")


def base_loss(gt: ImageLike, restored: ImageLike, base: str = "l1", params: LossParams = LossParams()) -> float:
    if base == "l1":
        return l1_loss(gt, restored)
    if base == "l1+freq":
        return l1_loss(gt, restored) + params.lambda_freq * freq_loss(gt, restored)
    raise ParameterError(f"unknown base loss {base!r}; choose from {BASE_LOSSES}")


def composite_loss(
    gt: ImageLike,
    restored: ImageLike,
    base: str = "l1",
    params: LossParams = LossParams(),
) -> float:
    """Base loss minus ``beta`` times the sharpness Q of the restored image.

    The value may be negative. Q sees only ``restored``, so the loss is not
    symmetric in its arguments.
    """
    value = base_loss(gt, restored, base, params)
    if params.beta == 0:
        return value
    return value - params.beta * compute_q(restored, params.k, params.threshold).q
