"""No-reference sharpness metric Q.

For each ``k x k`` patch the gradient matrix ``G = [gx gy]`` (``k*k x 2``) is
summarised by its 2x2 structure tensor ``G^T G``; its eigenvalues give the
squared singular values ``s1 >= s2``. Patches whose coherence
``(s1 - s2) / (s1 + s2)`` exceeds a noise-calibrated threshold count as
anisotropic, and Q is the mean of ``s1 * coherence`` over those patches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from ._parallel import bands, ordered_map
from .errors import ImageSizeError, ParameterError
from .image import ImageLike, PatchGrid, as_array, tile

EPS = 1e-12
DEFAULT_PATCH_SIZE = 8
DEFAULT_CONFIDENCE = 0.001
DEFAULT_TRIALS = 200_000
DEFAULT_SEED = 7

# calibrate_threshold(8, 0.001, trials=200_000, seed=7); regenerated by
# tests/test_sharpness.py::test_frozen_default_threshold.
DEFAULT_THRESHOLD_K8 = 0.2736379934623378


def gradient_field(img: ImageLike) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients ``(gx, gy)``; one-sided at the borders."""
    arr = as_array(img)
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ImageSizeError(
            f"gradient needs an image of at least 2x2, got {arr.shape[1]}x{arr.shape[0]}"
        )
    gy, gx = np.gradient(arr)
    return gx, gy


def block_sum(blocks: np.ndarray) -> np.ndarray:
    """Sum the trailing ``k x k`` axes of a block array in row-major order.

    Each patch is accumulated left-to-right within a row, then rows
    top-to-bottom, so the result per patch is identical to a plain nested
    loop regardless of how many patches are processed together.
    """
    k_rows, k_cols = blocks.shape[-2:]
    rows = blocks[..., 0].copy()
    for j in range(1, k_cols):
        rows += blocks[..., j]
    total = rows[..., 0].copy()
    for i in range(1, k_rows):
        total += rows[..., i]
    return total


def tensor_spectrum(a, b, c):
    """Singular values, coherence and q from structure tensor entries.

    ``a = sum gx^2``, ``b = sum gx*gy``, ``c = sum gy^2``; works elementwise on
    arrays. Returns ``(s1, s2, coherence, q)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    trace = a + c
    root = np.sqrt((a - c) ** 2 + 4.0 * b * b)
    lam_hi = 0.5 * (trace + root)
    lam_lo = np.maximum(0.5 * (trace - root), 0.0)
    s1 = np.sqrt(lam_hi)
    s2 = np.sqrt(lam_lo)
    total = s1 + s2
    coherence = (s1 - s2) / (total + EPS)
    q = np.where(total > 0, s1 * (s1 - s2) / np.where(total > 0, total, 1.0), 0.0)
    return s1, s2, coherence, q


@dataclass(frozen=True)
class PatchSpectrum:
    s1: float
    s2: float
    coherence: float
    q_patch: float
    selected: bool = False
    row: int = 0
    col: int = 0


def patch_spectrum(gx: np.ndarray, gy: np.ndarray) -> PatchSpectrum:
    """Spectrum of the gradient matrix built from one patch of ``gx``/``gy``."""
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    if gx.shape != gy.shape or gx.ndim != 2:
        raise ParameterError(f"gradient patches must be equal 2-D arrays, got {gx.shape} and {gy.shape}")
    s1, s2, coh, q = tensor_spectrum(block_sum(gx * gx), block_sum(gx * gy), block_sum(gy * gy))
    return PatchSpectrum(float(s1), float(s2), float(coh), float(q))


def _noise_coherence(k: int, trials: int, rng: np.random.Generator, chunk: int = 20_000) -> np.ndarray:
    out = np.empty(trials)
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        # one-pixel margin so every patch pixel gets a central difference,
        # as interior patches of a real image do
        noise = rng.standard_normal((n, k + 2, k + 2))
        gx = 0.5 * (noise[:, 1:-1, 2:] - noise[:, 1:-1, :-2])
        gy = 0.5 * (noise[:, 2:, 1:-1] - noise[:, :-2, 1:-1])
        _, _, coh, _ = tensor_spectrum(
            block_sum(gx * gx), block_sum(gx * gy), block_sum(gy * gy)
        )
        out[done: done + n] = coh
        done += n
    return out


def calibrate_threshold(
    k: int = DEFAULT_PATCH_SIZE,
    delta: float = DEFAULT_CONFIDENCE,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
) -> float:
    """Coherence threshold that pure Gaussian noise exceeds with probability ``delta``.

    Returns the ``1 - delta`` quantile of coherence over ``trials`` seeded
    white-noise ``k x k`` patches.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"confidence delta must lie in (0, 1), got {delta}")
    if trials < 1000:
        raise ParameterError(f"need at least 1000 trials, got {trials}")
    if k < 2:
        raise ParameterError(f"patch size must be at least 2, got {k}")
    coh = _noise_coherence(k, trials, np.random.default_rng(seed))
    return float(np.quantile(coh, 1.0 - delta))


@lru_cache(maxsize=None)
def default_threshold(k: int = DEFAULT_PATCH_SIZE) -> float:
    """Shipped threshold for ``k``; other patch sizes are calibrated on first use."""
    if k == DEFAULT_PATCH_SIZE:
        return DEFAULT_THRESHOLD_K8
    return calibrate_threshold(k, DEFAULT_CONFIDENCE, DEFAULT_TRIALS, DEFAULT_SEED)


@lru_cache(maxsize=None)
def resolve_threshold(
    k: int = DEFAULT_PATCH_SIZE,
    delta: float = DEFAULT_CONFIDENCE,
    override: Optional[float] = None,
) -> float:
    """Threshold actually used for a (k, delta) pair unless ``override`` is given."""
    if override is not None:
        return float(override)
    if delta == DEFAULT_CONFIDENCE:
        return default_threshold(k)
    return calibrate_threshold(k, delta, DEFAULT_TRIALS, DEFAULT_SEED)


@dataclass(frozen=True)
class QResult:
    """Image-level Q with per-patch arrays laid out on the patch grid."""

    q: float
    patch_size: int
    threshold: float
    grid: PatchGrid
    s1: np.ndarray = field(repr=False)
    s2: np.ndarray = field(repr=False)
    coherence: np.ndarray = field(repr=False)
    q_patch: np.ndarray = field(repr=False)
    selected: np.ndarray = field(repr=False)

    @property
    def selected_count(self) -> int:
        return int(self.selected.sum())

    @property
    def total_count(self) -> int:
        return self.grid.count

    @property
    def per_patch(self) -> list[PatchSpectrum]:
        out = []
        for r in range(self.grid.rows):
            for c in range(self.grid.cols):
                out.append(PatchSpectrum(
                    float(self.s1[r, c]), float(self.s2[r, c]),
                    float(self.coherence[r, c]), float(self.q_patch[r, c]),
                    bool(self.selected[r, c]), r, c,
                ))
        return out


def _band_spectrum(gx, gy, grid: PatchGrid, span: tuple[int, int]):
    r0, r1 = span
    bx = grid.blocks(gx, r0, r1)
    by = grid.blocks(gy, r0, r1)
    return tensor_spectrum(block_sum(bx * bx), block_sum(bx * by), block_sum(by * by))


def compute_q(
    img: ImageLike,
    k: int = DEFAULT_PATCH_SIZE,
    threshold: Optional[float] = None,
    threads: int = 1,
) -> QResult:
    """Sharpness Q of ``img`` over ``k x k`` patches.

    A patch is selected when its coherence is strictly above ``threshold``
    (default: the noise-calibrated value for ``k``). Q is the mean q_patch of
    the selected patches, 0 when none qualify. ``threads`` only changes speed,
    never the result.
    """
    arr = as_array(img)
    grid = tile(arr, k)
    tau = default_threshold(k) if threshold is None else float(threshold)
    gx, gy = gradient_field(arr)

    parts = ordered_map(lambda span: _band_spectrum(gx, gy, grid, span), bands(grid.rows, threads), threads)
    s1, s2, coh, qp = (np.concatenate([p[i] for p in parts], axis=0) for i in range(4))

    selected = coh > tau
    n_sel = int(selected.sum())
    q = math.fsum(qp[selected].tolist()) / n_sel if n_sel else 0.0
    return QResult(q, k, tau, grid, s1, s2, coh, qp, selected)
