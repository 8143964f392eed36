"""Synthetic degradations: Gaussian blur plus noise, and unsharp-mask sharpening.

The blur model is ``G = I * H_K + eta`` with a normalised ``K x K`` Gaussian
``H_K`` and i.i.d. Gaussian noise ``eta``; noise is applied after blurring.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, fields
from typing import Mapping, Union

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ImageIOError, ImageSizeError, ParameterError
from .image import ImageLike, LumaImage, as_array

CONFIG_KEYS = ("kernel_size", "sigma_blur", "sigma_noise", "seed", "gamma", "radius_sigma")


@dataclass(frozen=True)
class DegradeSpec:
    kernel_size: int = 9
    sigma_blur: float = 2.0
    sigma_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ParameterError(f"kernel size must be odd and >= 1, got {self.kernel_size}")
        if not self.sigma_blur > 0:
            raise ParameterError(f"sigma_blur must be > 0, got {self.sigma_blur}")
        if self.sigma_noise < 0:
            raise ParameterError(f"sigma_noise must be >= 0, got {self.sigma_noise}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "DegradeSpec":
        return cls(**_pick(cls, values))


@dataclass(frozen=True)
class SharpenSpec:
    gamma: float = 1.0
    radius_sigma: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if not self.radius_sigma > 0:
            raise ParameterError(f"radius_sigma must be > 0, got {self.radius_sigma}")

    @property
    def kernel_size(self) -> int:
        # support of about six standard deviations
        return 2 * math.ceil(3.0 * self.radius_sigma) + 1

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "SharpenSpec":
        return cls(**_pick(cls, values))


def _pick(cls, values: Mapping[str, object]) -> dict:
    out = {}
    for f in fields(cls):
        if f.name in values:
            out[f.name] = int(values[f.name]) if f.type in ("int", int) else float(values[f.name])
    return out


def read_config(path: Union[str, os.PathLike]) -> dict[str, str]:
    """Read a ``key = value`` file (``#`` comments allowed) into a dict.

    Only the documented degradation/sharpening keys are accepted.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[spec]\n" + fh.read())
    except OSError as exc:
        raise ImageIOError(path, exc.strerror or str(exc)) from exc
    values = dict(parser["spec"])
    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ParameterError(f"{path}: unknown config keys {unknown}; allowed: {list(CONFIG_KEYS)}")
    return values


def gaussian_kernel1d(size: int, sigma: float) -> np.ndarray:
    """Sampled Gaussian of odd length ``size``, normalised to unit sum."""
    if size < 1 or size % 2 == 0:
        raise ParameterError(f"kernel size must be odd and >= 1, got {size}")
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_kernel2d(size: int, sigma: float) -> np.ndarray:
    k = gaussian_kernel1d(size, sigma)
    return np.outer(k, k)


def _separable_blur(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = correlate1d(arr, kernel, axis=0, mode="nearest")
    return correlate1d(out, kernel, axis=1, mode="nearest")


def gaussian_blur(img: ImageLike, spec: DegradeSpec = DegradeSpec()) -> LumaImage:
    """Replicate-edge separable Gaussian blur with a ``K x K`` kernel."""
    arr = as_array(img)
    K = spec.kernel_size
    if arr.shape[0] < K or arr.shape[1] < K:
        raise ImageSizeError(
            f"image {arr.shape[1]}x{arr.shape[0]} is smaller than the {K}x{K} blur kernel"
        )
    out = _separable_blur(arr, gaussian_kernel1d(K, spec.sigma_blur))
    return LumaImage.from_array(out, clip=True)


def add_noise(img: ImageLike, spec: DegradeSpec) -> LumaImage:
    """Add seeded zero-mean Gaussian noise of std ``spec.sigma_noise`` and clamp."""
    arr = as_array(img)
    if spec.sigma_noise == 0:
        return LumaImage.from_array(arr, clip=True)
    rng = np.random.default_rng(spec.seed)
    noisy = arr + rng.normal(0.0, spec.sigma_noise, size=arr.shape)
    return LumaImage.from_array(noisy, clip=True)


def degrade(img: ImageLike, spec: DegradeSpec) -> LumaImage:
    """Blur then add noise."""
    return add_noise(gaussian_blur(img, spec), spec)


def unsharp_residual(img: ImageLike, spec: SharpenSpec) -> np.ndarray:
    """Unclamped ``img + gamma * (img - blur(img))``; exposes over/undershoot."""
    arr = as_array(img)
    K = spec.kernel_size
    if arr.shape[0] < K or arr.shape[1] < K:
        raise ImageSizeError(
            f"image {arr.shape[1]}x{arr.shape[0]} is smaller than the {K}x{K} "
            f"support of radius_sigma={spec.radius_sigma}"
        )
    if spec.gamma == 0:
        return arr.copy()
    smooth = _separable_blur(arr, gaussian_kernel1d(K, spec.radius_sigma))
    return arr + spec.gamma * (arr - smooth)


def unsharp_mask(img: ImageLike, spec: SharpenSpec) -> LumaImage:
    """Sharpen by adding ``gamma`` times the Gaussian high-pass, clamped to [0, 1]."""
    return LumaImage.from_array(unsharp_residual(img, spec), clip=True)
