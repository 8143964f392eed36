import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sharpmetrics import DegradeSpec, ImageSizeError, ParameterError, gaussian_blur
from sharpmetrics.sharpness import (
    DEFAULT_THRESHOLD_K8,
    _noise_coherence,
    calibrate_threshold,
    compute_q,
    gradient_field,
    patch_spectrum,
)

from oracles import naive_gradient, naive_q, svd_spectrum


def test_gradient_constant_is_zero():
    gx, gy = gradient_field(np.full((6, 9), 0.4))
    assert not gx.any() and not gy.any()


def test_gradient_horizontal_ramp():
    w = 11
    img = np.tile(np.arange(w) / (w - 1), (5, 1))
    gx, gy = gradient_field(img)
    assert np.allclose(gx[:, 1:-1], 1 / (w - 1), atol=1e-15)
    assert np.allclose(gy, 0, atol=1e-15)


def test_gradient_matches_brute_force(rng):
    img = rng.random((8, 8))
    gx, gy = gradient_field(img)
    ngx, ngy = naive_gradient(img)
    assert np.max(np.abs(gx - ngx)) < 1e-12
    assert np.max(np.abs(gy - ngy)) < 1e-12


def test_gradient_rejects_single_row():
    with pytest.raises(ImageSizeError):
        gradient_field(np.zeros((1, 10)))


def test_spectrum_pure_horizontal_gradient():
    k = 8
    sp = patch_spectrum(np.ones((k, k)), np.zeros((k, k)))
    assert sp.s1 == pytest.approx(k, abs=1e-12)
    assert sp.s2 == 0.0
    assert sp.coherence == pytest.approx(1.0, abs=1e-12)
    assert sp.q_patch == pytest.approx(k, abs=1e-12)


def test_spectrum_zero_patch():
    sp = patch_spectrum(np.zeros((8, 8)), np.zeros((8, 8)))
    assert (sp.s1, sp.s2, sp.coherence, sp.q_patch) == (0.0, 0.0, 0.0, 0.0)


def test_spectrum_matches_svd(rng):
    worst = 0.0
    for _ in range(1000):
        gx, gy = rng.normal(size=(2, 8, 8))
        sp = patch_spectrum(gx, gy)
        s1, s2 = svd_spectrum(gx, gy)
        worst = max(worst, abs(sp.s1 - s1), abs(sp.s2 - s2))
    assert worst < 1e-9


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (2, 6, 6), elements=st.floats(-5, 5)))
def test_spectrum_invariants(g):
    sp = patch_spectrum(g[0], g[1])
    assert sp.s1 >= sp.s2 >= 0
    assert 0.0 <= sp.coherence <= 1.0
    assert sp.q_patch <= sp.s1 + 1e-12
    if sp.s1 == sp.s2:
        assert sp.coherence == 0.0


def test_calibration_deterministic():
    a = calibrate_threshold(8, 0.001, trials=100_000, seed=7)
    b = calibrate_threshold(8, 0.001, trials=100_000, seed=7)
    assert a == b
    assert 0.0 < a < 1.0


def test_frozen_default_threshold():
    assert calibrate_threshold(8, 0.001, trials=200_000, seed=7) == DEFAULT_THRESHOLD_K8


def test_calibration_delta_near_one_gives_minimum():
    coh = _noise_coherence(8, 5000, np.random.default_rng(3))
    tau = calibrate_threshold(8, 1 - 1e-12, trials=5000, seed=3)
    assert tau == pytest.approx(coh.min(), abs=1e-9)


def test_calibration_threshold_shrinks_with_larger_patches():
    # more gradient samples make noise look more isotropic
    assert calibrate_threshold(16, 0.001, 20_000, 1) < calibrate_threshold(8, 0.001, 20_000, 1)


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.1, 2.0])
def test_calibration_rejects_bad_delta(delta):
    with pytest.raises(ParameterError):
        calibrate_threshold(8, delta, 1000, 0)


def test_calibration_rejects_few_trials():
    with pytest.raises(ParameterError):
        calibrate_threshold(8, 0.01, 999, 0)


def test_q_constant_image():
    res = compute_q(np.full((64, 64), 0.3))
    assert res.q == 0.0
    assert res.selected_count == 0
    assert res.total_count == 64


def test_q_matches_naive_loop(rng):
    img = rng.random((40, 36))
    for tau in (-1.0, 0.2, DEFAULT_THRESHOLD_K8):
        assert compute_q(img, 8, tau).q == pytest.approx(naive_q(img, 8, tau), abs=1e-12)


def test_q_select_all_threshold(rng):
    res = compute_q(rng.random((32, 32)), 8, threshold=-1.0)
    assert res.selected_count == res.total_count == 16
    assert res.q == pytest.approx(res.q_patch.mean(), abs=1e-12)


def test_q_per_patch_listing(rng):
    res = compute_q(rng.random((24, 16)), 8, threshold=0.1)
    patches = res.per_patch
    assert [(p.row, p.col) for p in patches] == [(r, c) for r in range(3) for c in range(2)]
    assert sum(p.selected for p in patches) == res.selected_count


@pytest.mark.parametrize("threads", [2, 3, 7])
def test_q_threads_bit_identical(corpus, threads):
    img = corpus["astronaut"]
    base = compute_q(img)
    other = compute_q(img, threads=threads)
    assert other.q == base.q
    assert np.array_equal(other.q_patch, base.q_patch)


def test_q_lower_after_blur(corpus):
    for name, img in corpus.items():
        blurred = gaussian_blur(img, DegradeSpec(9, 2.0)).pixels
        assert compute_q(blurred).q < compute_q(img).q, name


@pytest.mark.parametrize("c", [1.0, 0.75, 0.5, 0.1])
def test_q_contrast_covariance(corpus, c):
    img = corpus["camera"]
    base, scaled = compute_q(img), compute_q(c * img)
    assert np.array_equal(base.selected, scaled.selected)
    assert scaled.q == pytest.approx(c * base.q, abs=1e-9)


def test_q_rotation_invariance(corpus):
    for name in ("camera", "brick", "chelsea"):
        img = corpus[name]
        assert compute_q(np.rot90(img)).q == pytest.approx(compute_q(img).q, abs=1e-9), name
