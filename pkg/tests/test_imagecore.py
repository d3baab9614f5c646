import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from tetrosense.errors import DimensionError, ImageFormatError, ParameterError
from tetrosense.imagecore import (LUMA_WEIGHTS, ChartKind, ChartSpec, center_crop, check_image,
                                  crop_divisible, list_images, load_image, make_chart, save_image,
                                  to_uint8)


def test_load_scales_bytes(tmp_path):
    p = tmp_path / "a.png"
    Image.fromarray(np.array([[0, 255], [128, 64]], dtype=np.uint8), mode="L").save(p)
    img = load_image(p)
    np.testing.assert_array_equal(img, np.array([[0, 1], [128 / 255, 64 / 255]]))


def test_gray_rgb_equivalence(tmp_path):
    rng = np.random.default_rng(3)
    g = rng.integers(0, 256, size=(9, 7), dtype=np.uint8)
    Image.fromarray(g, mode="L").save(tmp_path / "g.png")
    Image.fromarray(np.stack([g] * 3, axis=-1), mode="RGB").save(tmp_path / "c.png")
    np.testing.assert_allclose(load_image(tmp_path / "c.png"), load_image(tmp_path / "g.png"), atol=1e-12)


def test_color_uses_bt601(tmp_path):
    px = np.array([[[200, 10, 60]]], dtype=np.uint8)
    Image.fromarray(px, mode="RGB").save(tmp_path / "c.png")
    expected = (0.299 * 200 + 0.587 * 10 + 0.114 * 60) / 255
    assert load_image(tmp_path / "c.png")[0, 0] == pytest.approx(expected, abs=1e-12)
    assert sum(LUMA_WEIGHTS) == pytest.approx(1.0)


def test_pgm_input(tmp_path):
    g = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    p = tmp_path / "x.pgm"
    p.write_bytes(b"P5\n4 3\n255\n" + g.tobytes())
    np.testing.assert_array_equal(load_image(p), g / 255.0)


def test_unsupported_format(tmp_path):
    p = tmp_path / "x.bmp"
    Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).save(p, format="BMP")
    with pytest.raises(ImageFormatError):
        load_image(p)
    q = tmp_path / "junk.png"
    q.write_bytes(b"not an image")
    with pytest.raises(ImageFormatError):
        load_image(q)
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "missing.png")


def test_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    g = rng.integers(0, 256, size=(13, 17), dtype=np.uint8)
    Image.fromarray(g, mode="L").save(tmp_path / "a.png")
    img = load_image(tmp_path / "a.png")
    save_image(img, tmp_path / "b.png")
    np.testing.assert_array_equal(to_uint8(load_image(tmp_path / "b.png")), g)


def test_quantization_rule():
    np.testing.assert_array_equal(to_uint8([[0.0, 1.0, 0.5, -0.2, 1.3, 0.501 / 255]]),
                                  [[0, 255, 128, 0, 255, 1]])


def test_crop_divisible():
    assert crop_divisible(np.zeros((1200, 1200)), 4).shape == (1200, 1200)
    assert crop_divisible(np.zeros((1201, 1199)), 4).shape == (1200, 1196)
    img = np.arange(49.0).reshape(7, 7)
    np.testing.assert_array_equal(crop_divisible(img, 6), img[:6, :6])
    with pytest.raises(DimensionError):
        crop_divisible(np.zeros((5, 5)), 8)
    with pytest.raises(ParameterError):
        crop_divisible(np.zeros((5, 5)), 1)


def test_center_crop():
    img = np.arange(100.0).reshape(10, 10)
    np.testing.assert_array_equal(center_crop(img, 4, 6), img[3:7, 2:8])
    with pytest.raises(DimensionError):
        center_crop(img, 11, 2)


def test_list_images(tmp_path):
    for name in ("b.png", "a.pgm", "c.txt", "d.PNG"):
        (tmp_path / name).write_bytes(b"")
    assert [p.name for p in list_images(tmp_path)] == ["a.pgm", "b.png", "d.PNG"]
    with pytest.raises(FileNotFoundError):
        list_images(tmp_path / "nope")


def test_check_image():
    with pytest.raises(ParameterError):
        check_image([[0.0, 1.5]])
    with pytest.raises(DimensionError):
        check_image(np.zeros(4))


def test_chart_constant():
    np.testing.assert_array_equal(make_chart(ChartSpec(ChartKind.CONSTANT), 32, 32), 0.5)


def test_chart_fine_lines_period2():
    img = make_chart(ChartSpec(ChartKind.FINE_LINES, period=2, orientation=0, contrast=1), 32, 32)
    expected = np.tile(np.array([[1.0], [0.0]]), (16, 32))
    np.testing.assert_array_equal(img, expected)


def test_chart_fine_lines_vertical():
    img = make_chart(ChartSpec(ChartKind.FINE_LINES, period=4, orientation=90), 16, 16)
    np.testing.assert_array_equal(img[0, :8], [1, 1, 0, 0, 1, 1, 0, 0])
    assert np.all(img == img[0])


def test_zone_plate_center_brightest():
    img = make_chart(ChartSpec(ChartKind.ZONE_PLATE, period=2), 64, 64)
    # cos(k r^2) at r = 0 is 1, the maximum
    assert img[32, 32] == pytest.approx(1.0)
    assert img[32, 32] == img.max()


def test_chart_errors():
    with pytest.raises(ParameterError):
        ChartSpec(ChartKind.FINE_LINES, period=0.5)
    with pytest.raises(ParameterError):
        ChartSpec(ChartKind.FINE_LINES, contrast=0)
    with pytest.raises(DimensionError):
        make_chart(ChartSpec(), 8, 32)


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(list(ChartKind)),
       period=st.floats(1.0, 20.0),
       orientation=st.floats(-180, 180),
       contrast=st.floats(0.01, 1.0),
       M=st.integers(16, 40), N=st.integers(16, 40))
def test_chart_range_and_determinism(kind, period, orientation, contrast, M, N):
    spec = ChartSpec(kind, period, orientation, contrast)
    a = make_chart(spec, M, N)
    assert a.shape == (M, N)
    assert a.min() >= 0.0 and a.max() <= 1.0
    np.testing.assert_array_equal(a, make_chart(spec, M, N))
