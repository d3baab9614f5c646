import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import TETROMINO_LAYOUTS, smooth_periodic
from oracles import bicubic_loop
from tetrosense.errors import DimensionError, ParameterError, UnsupportedCombination
from tetrosense.imagecore import crop_divisible
from tetrosense.metrics import psnr
from tetrosense.reconstruct import (SplConfig, bicubic_upscale, get_solver, reconstruct,
                                    solver_registry, spl_reconstruct)
from tetrosense.sensing import adjoint, build_operator, measure
from tetrosense.tiling import ShapeClass, get_layout, layout_square2x2, layout_t4x4

FAST = SplConfig(max_iters=30)


# ------------------------------------------------------------------ bicubic

def test_bicubic_constant_and_shape():
    out = bicubic_upscale(np.full((15, 15), 0.5))
    assert out.shape == (30, 30)
    np.testing.assert_allclose(out, 0.5, atol=1e-15)


def test_bicubic_reproduces_ramp():
    m = 20
    a = np.arange(m)[:, None] * np.ones((1, 12))
    out = bicubic_upscale(a / m)
    # high-res row x sits at low-res coordinate x/2 - 1/4
    x = np.arange(2 * m)[:, None]
    expected = np.broadcast_to((x / 2 - 0.25) / m, out.shape)
    np.testing.assert_allclose(out[4:-4], expected[4:-4], atol=1e-3)


def test_bicubic_matches_loop_oracle():
    lr = np.random.default_rng(0).random((7, 9))
    np.testing.assert_allclose(bicubic_upscale(lr), bicubic_loop(lr), atol=1e-12)


def test_bicubic_output_clamped():
    lr = np.zeros((8, 8))
    lr[::2, ::2] = 1
    out = bicubic_upscale(lr)
    assert out.min() >= 0 and out.max() <= 1


def test_bicubic_rejects_non_2d():
    with pytest.raises(DimensionError):
        bicubic_upscale(np.zeros(4))


# ---------------------------------------------------------------------- SPL

def test_spl_config_validation_and_mapping():
    cfg = SplConfig.from_mapping({"target": "8", "spl_window": 24, "lambda0": "0.1", "max-iters": "3"})
    assert (cfg.target, cfg.window, cfg.lambda0, cfg.max_iters) == (8, 24, 0.1, 3)
    assert SplConfig.from_mapping(cfg.as_dict()) == cfg
    for bad in (dict(target=20, window=16), dict(target=16, window=31), dict(wiener=2),
                dict(max_iters=0), dict(decay=1.5), dict(wiener_noise=-1)):
        with pytest.raises(ParameterError):
            SplConfig(**bad)
    with pytest.raises(ParameterError):
        SplConfig.from_mapping({"colour": 1})


@pytest.mark.parametrize("name", ["square2x2", *TETROMINO_LAYOUTS])
def test_spl_constant_image(name):
    lay = get_layout(name)
    M = 48 - 48 % lay.cell
    op = build_operator(lay, M, M)
    rec = spl_reconstruct(op, measure(op, np.full((M, M), 0.5)))
    np.testing.assert_allclose(rec.image, 0.5, atol=1e-6)
    assert rec.residual <= 1e-6


def test_spl_square_consistency(natural_crop):
    op = build_operator(layout_square2x2(), 128, 128)
    y = measure(op, natural_crop)
    rec = spl_reconstruct(op, y)
    assert rec.residual <= 1e-3
    # blocks untouched by the final [0, 1] clamp are consistent to rounding
    inner = (rec.image > 0) & (rec.image < 1)
    ok = np.bincount(op.owner.ravel(), weights=inner.ravel(), minlength=op.L) == 4
    np.testing.assert_allclose(measure(op, rec.image)[ok], y[ok], atol=1e-9)


def test_spl_beats_backprojection(natural_crop):
    op = build_operator(layout_t4x4(), 128, 128)
    y = measure(op, natural_crop)
    rec = reconstruct(op, y, "spl")
    assert rec.residual <= 1e-2
    assert psnr(natural_crop, rec.image) >= psnr(natural_crop, adjoint(op, y) / 4)
    assert rec.image.min() >= 0 and rec.image.max() <= 1
    assert 1 <= rec.iterations_used <= 200


def test_spl_landweber_monotone(natural_crop):
    f = crop_divisible(natural_crop, 6)
    op = build_operator(get_layout("galdo6x6"), *f.shape)
    rec = spl_reconstruct(op, measure(op, f), FAST, record_history=True)
    pre, post = rec.history["pre_projection"], rec.history["post_projection"]
    assert pre.shape == post.shape and len(pre) == 2 * FAST.max_iters
    # each projection step never increases a window's residual
    assert np.all(post <= pre + 1e-12)


def test_spl_seam_free():
    f = smooth_periodic(64, 64)
    op = build_operator(layout_t4x4(), 64, 64)
    err = spl_reconstruct(op, measure(op, f)).image - f
    for x in range(16, 64, 16):
        assert np.abs(err[x] - err[x - 1]).max() <= 2 / 255
        assert np.abs(err[:, x] - err[:, x - 1]).max() <= 2 / 255


def test_spl_deterministic(natural_crop):
    f = natural_crop[:64, :64]
    op = build_operator(get_layout("geared8x8"), 64, 64)
    y = measure(op, f)
    a = spl_reconstruct(op, y, FAST)
    b = spl_reconstruct(op, y, FAST)
    np.testing.assert_array_equal(a.image, b.image)
    assert a.iterations_used == b.iterations_used


def test_spl_mass_conservation(natural_crop):
    op = build_operator(layout_t4x4(), 128, 128)
    y = measure(op, natural_crop)
    rec = spl_reconstruct(op, y)
    # mean pixel value equals mean measurement / 4
    assert abs(rec.image.mean() - y.mean() / 4) / y.mean() <= 1e-2


def test_spl_every_measurement_matters():
    f = smooth_periodic(32, 32)
    op = build_operator(layout_t4x4(), 32, 32)
    y = measure(op, f)
    cfg = SplConfig(max_iters=5)
    base = spl_reconstruct(op, y, cfg).image
    for i in range(0, op.L, 7):
        y2 = y.copy()
        y2[i] = 0.0
        assert not np.array_equal(spl_reconstruct(op, y2, cfg).image, base)


def test_spl_partial_target_blocks():
    # 36 is divisible by the 6x6 cell but not by the 16-pixel target
    f = smooth_periodic(36, 36)
    op = build_operator(get_layout("galdo6x6"), 36, 36)
    rec = spl_reconstruct(op, measure(op, f))
    assert rec.image.shape == (36, 36)
    assert rec.residual <= 1e-2


def test_spl_errors():
    op = build_operator(layout_t4x4(), 16, 16)
    with pytest.raises(DimensionError):
        spl_reconstruct(op, np.zeros(op.L))  # window larger than image
    op = build_operator(layout_t4x4(), 32, 32)
    with pytest.raises(DimensionError):
        spl_reconstruct(op, np.zeros(3))


def test_non_convergence_is_not_an_error(natural_crop):
    op = build_operator(layout_t4x4(), 64, 64)
    rec = spl_reconstruct(op, measure(op, natural_crop[:64, :64]), SplConfig(max_iters=2, tol=0))
    assert rec.iterations_used == 2


# ----------------------------------------------------------------- registry

def test_registry():
    reg = solver_registry()
    assert [s.name for s in reg] == ["bicubic", "spl"]
    spl = get_solver("spl")
    assert ShapeClass.TLZ in spl.layouts and ShapeClass.T in spl.layouts
    assert get_solver("bicubic").layouts == (ShapeClass.SQUARE,)
    get_solver("spl", build_operator(get_layout("galdo6x6"), 36, 36))
    with pytest.raises(UnsupportedCombination):
        get_solver("bicubic", build_operator(layout_t4x4(), 8, 8))
    with pytest.raises(ParameterError):
        get_solver("vdsr")


def test_bicubic_via_dispatcher(natural_crop):
    op = build_operator(layout_square2x2(), 128, 128)
    y = measure(op, natural_crop)
    rec = reconstruct(op, y, "bicubic")
    assert rec.method == "bicubic" and rec.iterations_used == 0
    assert np.isfinite(psnr(natural_crop, rec.image))
    with pytest.raises(UnsupportedCombination):
        reconstruct(build_operator(layout_t4x4(), 128, 128), measure(build_operator(layout_t4x4(), 128, 128), natural_crop), "bicubic")


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_spl_output_in_range(seed):
    f = np.random.default_rng(seed).random((32, 32))
    op = build_operator(layout_t4x4(), 32, 32)
    rec = spl_reconstruct(op, measure(op, f), SplConfig(max_iters=5))
    assert rec.image.min() >= 0 and rec.image.max() <= 1
    assert rec.residual >= 0
