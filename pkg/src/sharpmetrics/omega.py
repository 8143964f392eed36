"""Ringing-aware full-reference metric Omega.

Both images are cut into the same ``m x m`` tiles. Per tile, the sharpness of
the reference (``q_ref``) and of the restoration (``q_rest``) give a
deviation ratio ``alpha``; a decreasing sigmoid of ``alpha`` blends the
restored sharpness with the tile PSNR (capped at 50 dB):

    omega = (1 - sigma(alpha)) * P' + sigma(alpha) * q_rest

A faithful, modestly sharper tile keeps ``alpha`` small so its sharpness
counts; a tile whose sharpness departs far from the reference (ringing) is
scored by PSNR instead. Image-level Omega is the mean over tiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ._parallel import bands, ordered_map
from .errors import DimensionError, ParameterError
from .image import ImageLike, PatchGrid, as_array, require_same_shape, tile
from .sharpness import EPS, block_sum, tensor_spectrum

PSNR_CAP = 50.0


@dataclass(frozen=True)
class OmegaParams:
    R: float = 5.0
    alpha0: float = 1.2
    m: int = 16
    psnr_cap: float = PSNR_CAP
    alpha_cap: float = 10.0

    def __post_init__(self):
        if not self.R > 0:
            raise ParameterError(f"R must be > 0, got {self.R}")
        if not self.alpha0 > 0:
            raise ParameterError(f"alpha0 must be > 0, got {self.alpha0}")
        if self.m < 2:
            raise ParameterError(f"patch size m must be >= 2, got {self.m}")
        if self.psnr_cap != PSNR_CAP:
            raise ParameterError(f"psnr_cap is fixed at {PSNR_CAP} dB")
        if not self.alpha_cap > 0:
            raise ParameterError(f"alpha_cap must be > 0, got {self.alpha_cap}")


@dataclass(frozen=True)
class PatchOmega:
    q_ref: float
    q_rest: float
    alpha: float
    sigma: float
    p_prime: float
    omega: float
    row: int = 0
    col: int = 0


def _blocks_q(blocks: np.ndarray) -> np.ndarray:
    # gradients are taken inside each tile, as if it were a standalone image
    gy, gx = np.gradient(blocks, axis=(-2, -1))
    _, _, _, q = tensor_spectrum(block_sum(gx * gx), block_sum(gx * gy), block_sum(gy * gy))
    return q


def patch_q(patch: ImageLike) -> float:
    """Sharpness of a whole tile treated as one structure-tensor region."""
    arr = as_array(patch)
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise DimensionError(f"patch must be at least 2x2, got {arr.shape}")
    return float(_blocks_q(arr))


def deviation_ratio(q_ref, q_rest, alpha_cap: float = 10.0):
    """``|q_rest - q_ref| / q_ref`` with a fixed policy for a flat reference.

    Flat reference and flat restoration give 0; texture appearing on a flat
    reference gives ``alpha_cap``. Accepts scalars or arrays.
    """
    q_ref = np.asarray(q_ref, dtype=np.float64)
    q_rest = np.asarray(q_rest, dtype=np.float64)
    flat_ref = q_ref < EPS
    safe = np.where(flat_ref, 1.0, q_ref)
    alpha = np.where(flat_ref, np.where(q_rest < EPS, 0.0, alpha_cap), np.abs(q_rest - q_ref) / safe)
    return float(alpha) if alpha.ndim == 0 else alpha


def weight(alpha, params: OmegaParams = OmegaParams()):
    """Sigmoid ``1 / (1 + exp(R * (alpha - alpha0)))``, overflow-safe."""
    sigma = expit(-params.R * (np.asarray(alpha, dtype=np.float64) - params.alpha0))
    return float(sigma) if np.ndim(sigma) == 0 else sigma


def _psnr_from_mse(mse, cap: float = PSNR_CAP):
    mse = np.asarray(mse, dtype=np.float64)
    with np.errstate(divide="ignore"):
        db = np.where(mse > 0, -10.0 * np.log10(np.where(mse > 0, mse, 1.0)), np.inf)
    return np.minimum(db, cap)


def clipped_psnr(p: ImageLike, p_tilde: ImageLike) -> float:
    """Tile PSNR against a peak of 1.0, capped at 50 dB (identical tiles give 50)."""
    a, b = as_array(p), as_array(p_tilde)
    require_same_shape(a, b, "patches")
    d = a - b
    mse = block_sum(d * d) / d.size
    return float(_psnr_from_mse(mse))


@dataclass(frozen=True)
class OmegaResult:
    omega: float
    params: OmegaParams
    grid: PatchGrid
    q_ref: np.ndarray = field(repr=False)
    q_rest: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    p_prime: np.ndarray = field(repr=False)
    omega_patch: np.ndarray = field(repr=False)

    @property
    def per_patch(self) -> list[PatchOmega]:
        out = []
        for r in range(self.grid.rows):
            for c in range(self.grid.cols):
                out.append(PatchOmega(
                    float(self.q_ref[r, c]), float(self.q_rest[r, c]),
                    float(self.alpha[r, c]), float(self.sigma[r, c]),
                    float(self.p_prime[r, c]), float(self.omega_patch[r, c]), r, c,
                ))
        return out


def _band(ref, rest, grid: PatchGrid, span):
    r0, r1 = span
    br = grid.blocks(ref, r0, r1)
    bt = grid.blocks(rest, r0, r1)
    d = br - bt
    mse = block_sum(d * d) / (grid.patch_size * grid.patch_size)
    return _blocks_q(br), _blocks_q(bt), mse


def compute_omega(
    ref: ImageLike,
    rest: ImageLike,
    params: OmegaParams = OmegaParams(),
    threads: int = 1,
) -> OmegaResult:
    """Omega of restoration ``rest`` against ground truth ``ref``.

    ``threads`` splits the tile rows across workers; the result is bit-identical
    to the single-threaded run.
    """
    a, b = as_array(ref), as_array(rest)
    require_same_shape(a, b)
    grid = tile(a, params.m)

    parts = ordered_map(lambda span: _band(a, b, grid, span), bands(grid.rows, threads), threads)
    q_ref, q_rest, mse = (np.concatenate([p[i] for p in parts], axis=0) for i in range(3))

    alpha = deviation_ratio(q_ref, q_rest, params.alpha_cap)
    sigma = np.asarray(weight(alpha, params))
    p_prime = _psnr_from_mse(mse, params.psnr_cap)
    omega_patch = (1.0 - sigma) * p_prime + sigma * q_rest
    omega = math.fsum(omega_patch.ravel().tolist()) / grid.count
    return OmegaResult(omega, params, grid, q_ref, q_rest, alpha, sigma, p_prime, omega_patch)
