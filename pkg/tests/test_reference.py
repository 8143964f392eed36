import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from skimage.metrics import structural_similarity

from sharpmetrics import (
    DimensionError,
    ImageSizeError,
    LossParams,
    ParameterError,
    SharpenSpec,
    composite_loss,
    compute_q,
    freq_loss,
    l1_loss,
    mse,
    psnr,
    ssim,
    unsharp_mask,
)

from oracles import naive_dft_loss


images = arrays(np.float64, (12, 12), elements=st.floats(0, 1))


def test_mse_values(rng):
    a = rng.random((7, 9))
    assert mse(a, a) == 0.0
    assert mse(np.full((4, 4), 0.3), np.full((4, 4), 0.5)) == pytest.approx(0.04, abs=1e-15)
    b = rng.random((7, 9))
    naive = sum((a[y, x] - b[y, x]) ** 2 for y in range(7) for x in range(9)) / 63
    assert mse(a, b) == pytest.approx(naive, abs=1e-15)


def test_psnr_values():
    a = np.full((8, 8), 0.4)
    assert psnr(a, a + 0.1) == pytest.approx(20.0, abs=1e-12)
    assert psnr(a, a) == math.inf
    assert psnr(np.zeros((2, 2)), np.full((2, 2), 0.5)) == pytest.approx(6.020599913279624, abs=1e-12)


def test_psnr_monotone_in_mse():
    a = np.full((8, 8), 0.5)
    values = [psnr(a, a + d) for d in (0.01, 0.02, 0.05, 0.1, 0.3)]
    assert all(x > y for x, y in zip(values, values[1:]))


@pytest.mark.parametrize("fn", [mse, psnr, ssim, l1_loss, freq_loss])
def test_dimension_mismatch(fn):
    with pytest.raises(DimensionError):
        fn(np.zeros((16, 16)), np.zeros((16, 17)))


def test_ssim_identical_is_one(corpus):
    img = corpus["brick"]
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)


def test_ssim_matches_skimage(rng, corpus):
    a, b = rng.random((2, 32, 32))
    ref = structural_similarity(a, b, gaussian_weights=True, sigma=1.5, use_sample_covariance=False, data_range=1.0)
    assert ssim(a, b) == pytest.approx(ref, abs=1e-6)
    img = corpus["camera"]
    noisy = np.clip(img + rng.normal(0, 0.05, img.shape), 0, 1)
    ref = structural_similarity(img, noisy, gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
                                data_range=1.0)
    assert ssim(img, noisy) == pytest.approx(ref, abs=1e-6)


def test_ssim_negative_is_below_one_and_symmetric(corpus):
    img = corpus["camera"]
    neg = 1.0 - img
    assert ssim(img, neg) < 1.0
    assert ssim(img, neg) == pytest.approx(ssim(neg, img), abs=1e-12)


def test_ssim_needs_window():
    with pytest.raises(ImageSizeError):
        ssim(np.zeros((10, 30)), np.zeros((10, 30)))


def test_l1_values():
    assert l1_loss(np.full((3, 3), 0.2), np.full((3, 3), 0.7)) == pytest.approx(0.5)
    a = np.eye(4)
    assert l1_loss(a, a) == 0.0


@settings(max_examples=60, deadline=None)
@given(images, images, images)
def test_l1_triangle_inequality(a, b, c):
    assert l1_loss(a, c) <= l1_loss(a, b) + l1_loss(b, c) + 1e-12


@settings(max_examples=60, deadline=None)
@given(images, images)
def test_metrics_symmetric(a, b):
    for fn in (mse, psnr, l1_loss, freq_loss, ssim):
        assert fn(a, b) == pytest.approx(fn(b, a), abs=1e-12, nan_ok=True)


def test_freq_identical_zero(rng):
    a = rng.random((16, 16))
    assert freq_loss(a, a) == 0.0


def test_freq_constant_offset_single_bin(rng):
    a = rng.random((16, 12)) * 0.5
    d = 0.25
    diff = np.fft.fft2(a + d) - np.fft.fft2(a)
    nonzero = np.abs(diff) > 1e-9
    assert nonzero.sum() == 1 and nonzero[0, 0]
    # unnormalised forward transform averaged over bins: DC bin holds d*w*h
    assert freq_loss(a, a + d) == pytest.approx(d, abs=1e-12)


def test_freq_matches_brute_force_dft(rng):
    a, b = rng.random((2, 16, 16))
    assert freq_loss(a, b) == pytest.approx(naive_dft_loss(a, b), abs=1e-9)


def test_freq_zero_iff_equal(rng):
    a = rng.random((16, 16))
    for _ in range(20):
        b = a.copy()
        y, x = rng.integers(0, 16, size=2)
        b[y, x] += 1e-6
        assert freq_loss(a, b) > 0


def test_loss_params_validation():
    with pytest.raises(ParameterError):
        LossParams(beta=-0.1)
    with pytest.raises(ParameterError):
        LossParams(lambda_freq=-1)


def test_composite_flat_identical_zero():
    a = np.full((32, 32), 0.5)
    assert composite_loss(a, a) == 0.0


def test_composite_beta_zero_is_base(rng):
    a, b = rng.random((2, 32, 32))
    assert composite_loss(a, b, "l1", LossParams(beta=0.0)) == l1_loss(a, b)
    p = LossParams(beta=0.0, lambda_freq=0.3)
    assert composite_loss(a, b, "l1+freq", p) == l1_loss(a, b) + 0.3 * freq_loss(a, b)


def test_composite_composition(corpus, rng):
    gt = corpus["camera"]
    rest = np.clip(gt + rng.normal(0, 0.03, gt.shape), 0, 1)
    expected = l1_loss(gt, rest) - 0.1 * compute_q(rest).q
    assert composite_loss(gt, rest, "l1", LossParams(beta=0.1)) == pytest.approx(expected, abs=1e-12)
    p = LossParams(beta=0.01, lambda_freq=0.5)
    expected = l1_loss(gt, rest) + 0.5 * freq_loss(gt, rest) - 0.01 * compute_q(rest).q
    assert composite_loss(gt, rest, "l1+freq", p) == pytest.approx(expected, abs=1e-12)


def test_composite_unknown_base(rng):
    a = rng.random((16, 16))
    with pytest.raises(ParameterError):
        composite_loss(a, a, "l2")


def test_composite_is_asymmetric(corpus):
    from sharpmetrics import DegradeSpec, gaussian_blur

    sharp = corpus["brick"]
    blurry = gaussian_blur(sharp, DegradeSpec(9, 2.0)).pixels
    # l1 is symmetric, so the difference is exactly beta * (Q(sharp) - Q(blurry))
    assert composite_loss(blurry, sharp) < composite_loss(sharp, blurry)


def test_sharpening_lowers_composite_at_fixed_l1(corpus):
    gt = corpus["chelsea"]
    sharpened = unsharp_mask(gt, SharpenSpec(0.5)).pixels
    # gt = restored on both sides so the l1 term is zero by construction
    assert composite_loss(sharpened, sharpened) < composite_loss(gt, gt)
