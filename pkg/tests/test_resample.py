import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videodeg.core import psnr
from videodeg.resample import MODES, ResizeSpec, downscale, intermediate_size, resize, resizing_blur
from videodeg.rng import SeededRng


@pytest.mark.parametrize("mode", MODES)
def test_same_size_is_identity(mode, astronaut):
    assert np.allclose(resize(astronaut, 128, 128, mode), astronaut, atol=1e-6)
    assert np.allclose(resizing_blur(astronaut, ResizeSpec(1.0, mode)), astronaut, atol=1e-6)


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("shape", [(13, 7), (40, 90), (5, 5), (1, 3)])
def test_constant_preserved(mode, shape):
    frame = np.full((20, 30, 3), 0.63)
    assert np.allclose(resize(frame, *shape, mode), 0.63, atol=1e-12)


def test_area_checkerboard_to_gray():
    board = (np.indices((32, 32)).sum(axis=0) % 2).astype(float)
    frame = np.repeat(board[..., None], 3, axis=2)
    assert np.allclose(resize(frame, 16, 16, "area"), 0.5, atol=1e-15)


@pytest.mark.parametrize("k", [2, 4])
def test_area_reduces_noise_variance(k):
    z = SeededRng(1).normal((800, 800, 3))
    out = resize(z, 800 // k, 800 // k, "area")
    assert abs(out.var() * k * k / z.var() - 1) < 0.03


def test_area_weights_exact_box():
    # 6 -> 4 pixels: footprints of 1.5 samples
    x = np.arange(6, dtype=float)[None, :, None].repeat(3, axis=2)
    out = resize(x, 1, 4, "area")[0, :, 0]
    assert np.allclose(out, [(0 + 0.5 * 1) / 1.5, (0.5 * 1 + 2) / 1.5, (3 + 0.5 * 4) / 1.5, (0.5 * 4 + 5) / 1.5])


def test_bilinear_half_pixel_centres():
    x = np.arange(4, dtype=float)[None, :, None].repeat(3, axis=2)
    out = resize(x, 1, 8, "bilinear")[0, :, 0]
    assert np.allclose(out, [0, 0.25, 0.75, 1.25, 1.75, 2.25, 2.75, 3.0])


def test_bicubic_reproduces_linear_ramp_inside():
    # a = -0.5 cubic convolution reproduces linear functions away from the borders
    x = np.linspace(0.1, 0.9, 32)[None, :, None].repeat(3, axis=2)
    out = resize(x, 1, 64, "bicubic")[0, :, 0]
    src = (np.arange(64) + 0.5) / 2 - 0.5
    expected = 0.1 + src * (0.8 / 31)
    assert np.allclose(out[4:-4], expected[4:-4], atol=1e-12)


def test_bicubic_a_changes_result(astronaut):
    a = resize(astronaut, 64, 64, "bicubic", -0.5)
    b = resize(astronaut, 64, 64, "bicubic", -0.75)
    assert not np.allclose(a, b)


def test_upscale_first_preserves_more(natural):
    for img in natural.values():
        up = resizing_blur(img, ResizeSpec(2.0, "bilinear"))
        down = resizing_blur(img, ResizeSpec(0.5, "bilinear"))
        assert psnr(up, img) > psnr(down, img)


def test_half_scale_loses_checkerboard_contrast():
    board = (np.indices((32, 32)).sum(axis=0) % 2).astype(float)
    frame = np.repeat(board[..., None], 3, axis=2)
    out = resizing_blur(frame, ResizeSpec(0.5, "bilinear"))
    assert out.var() < frame.var()


def test_intermediate_size_mapping():
    assert intermediate_size(100, 60, 0.5) == (50, 30)
    assert intermediate_size(100, 60, 2.0) == (200, 120)
    with pytest.raises(ValueError):
        resizing_blur(np.zeros((2, 2, 3)), ResizeSpec(0.1, "area"))
    with pytest.raises(ValueError):
        resize(np.zeros((4, 4, 3)), 0, 3)
    with pytest.raises(ValueError):
        ResizeSpec(1.0, "lanczos")


def test_downscale_stack_and_frame(astronaut):
    stack = np.stack([astronaut, astronaut])
    assert downscale(stack, 0.5).shape == (2, 64, 64, 3)
    assert np.array_equal(downscale(stack, 0.5)[1], downscale(astronaut, 0.5))


@given(st.floats(0.5, 2.0), st.sampled_from(MODES), st.integers(8, 40), st.integers(8, 40))
@settings(max_examples=60, deadline=None)
def test_resizing_blur_keeps_dimensions(scale, mode, h, w):
    frame = SeededRng(0).random((h, w, 3))
    out = resizing_blur(frame, ResizeSpec(scale, mode))
    assert out.shape == frame.shape
    if mode == "bicubic":
        assert out.min() >= 0 and out.max() <= 1
