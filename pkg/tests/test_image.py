import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from sreval.image import (
    DecodeError,
    ImagePlane,
    MotionVector,
    Region,
    crop_center,
    decode_pgm,
    image_size,
    load_image,
    rgb_to_luma,
    save_pgm,
    save_png,
    translate,
)

from util import random_u8_plane


def test_plane_validation():
    with pytest.raises(ValueError):
        ImagePlane(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        ImagePlane(np.zeros(16))
    plane = ImagePlane(np.zeros((2, 3)))
    assert plane.width == 3 and plane.height == 2
    with pytest.raises(ValueError):
        plane.data[0, 0] = 1.0


def test_plane_data_is_row_major_passthrough():
    data = np.array([[0, 128], [255, 64]], dtype=np.uint8)
    plane = ImagePlane(data)
    assert plane.data.tolist() == [[0.0, 128.0], [255.0, 64.0]]


def test_pgm_identity_passthrough(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
    plane = load_image(path)
    assert plane.shape == (2, 2)
    assert plane.data.ravel().tolist() == [0.0, 128.0, 255.0, 64.0]


def test_pgm_with_comments_and_size_probe(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5 # comment\n# another\n3\t1 255\n" + bytes([9, 8, 7]))
    plane = load_image(path)
    assert plane.data.tolist() == [[9.0, 8.0, 7.0]]
    assert image_size(path) == (3, 1)


def test_pgm_rejects_high_bit_depth():
    with pytest.raises(DecodeError, match="bit depth"):
        decode_pgm(b"P5\n1 1\n65535\n\x00\x00")


def test_pgm_truncated():
    with pytest.raises(DecodeError, match="decode failure"):
        decode_pgm(b"P5\n2 2\n255\n\x00\x01")


def test_pgm_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    plane = random_u8_plane(rng, 13, 7)
    p1 = tmp_path / "a.pgm"
    save_pgm(plane, p1)
    loaded = load_image(p1)
    assert np.array_equal(loaded.data, plane.data)
    p2 = tmp_path / "b.pgm"
    save_pgm(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_png_gray_and_rgb(tmp_path):
    gray = tmp_path / "g.png"
    Image.fromarray(np.array([[12, 200]], dtype=np.uint8), "L").save(gray)
    assert load_image(gray).data.tolist() == [[12.0, 200.0]]

    rgb = tmp_path / "c.png"
    Image.fromarray(np.array([[[255, 0, 0]]], dtype=np.uint8), "RGB").save(rgb)
    assert load_image(rgb).data[0, 0] == pytest.approx(76.245, abs=1e-9)


def test_png_decode_failure(tmp_path):
    bad = tmp_path / "bad.png"
    good = tmp_path / "good.png"
    save_png(ImagePlane(np.zeros((4, 4))), good)
    bad.write_bytes(good.read_bytes()[:20])
    with pytest.raises(DecodeError, match="decode failure"):
        load_image(bad)


def test_png_unsupported_mode(tmp_path):
    path = tmp_path / "deep.png"
    Image.new("I;16", (2, 2)).save(path)
    with pytest.raises(DecodeError, match="unsupported"):
        load_image(path)


def test_unknown_format(tmp_path):
    path = tmp_path / "x.tiff"
    path.write_bytes(b"....")
    with pytest.raises(ValueError, match="format"):
        load_image(path)


def test_luma_closed_forms():
    assert rgb_to_luma(255, 255, 255) == pytest.approx(255.0, abs=1e-9)
    assert rgb_to_luma(0, 0, 0) == 0.0
    assert rgb_to_luma(255, 0, 0) == pytest.approx(76.245, abs=1e-9)


@given(st.integers(0, 255))
def test_luma_of_gray_is_identity(v):
    assert rgb_to_luma(v, v, v) == pytest.approx(v, abs=1e-9)


def test_crop_center_geometry():
    rng = np.random.default_rng(1)
    plane = random_u8_plane(rng, 80, 100)
    inner = crop_center(plane, 20)
    assert inner.shape == (40, 60)
    assert np.array_equal(inner.data, plane.data[20:60, 20:80])


def test_crop_center_zero_border_is_identity():
    rng = np.random.default_rng(2)
    plane = random_u8_plane(rng, 5, 6)
    assert np.array_equal(crop_center(plane, 0).data, plane.data)


def test_crop_center_too_small():
    plane = ImagePlane(np.zeros((30, 30)))
    with pytest.raises(ValueError):
        crop_center(plane, 20)
    with pytest.raises(ValueError):
        crop_center(plane, 15)  # needs strict >


def test_region_validation():
    with pytest.raises(ValueError):
        Region(0, 0, 0, 5)
    Region(1, 1, 2, 2).check_inside(3, 3)
    with pytest.raises(ValueError):
        Region(1, 1, 3, 2).check_inside(3, 3)


def test_translate_identity():
    rng = np.random.default_rng(3)
    plane = random_u8_plane(rng, 5, 5)
    assert np.array_equal(translate(plane, MotionVector(0, 0)).data, plane.data)


def test_translate_ramp_definition():
    ramp = ImagePlane(np.tile(np.arange(5.0), (5, 1)))
    out = translate(ramp, MotionVector(1, 0))
    assert np.isnan(out.data[:, 0]).all()
    assert np.array_equal(out.data[:, 1:], ramp.data[:, :-1])


def test_translate_compose_inverse():
    rng = np.random.default_rng(4)
    plane = random_u8_plane(rng, 12, 12)
    fwd = translate(plane, MotionVector(3, -2))
    back = translate(fwd, MotionVector(-3, 2))
    valid = ~np.isnan(back.data)
    assert valid.any()
    assert np.array_equal(back.data[valid], plane.data[valid])


@settings(max_examples=25, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3))
def test_crop_of_translate_reads_only_interior(dx, dy):
    # crop_center(translate(img, u), b) must only depend on samples inside
    # the border-(b - max|u|) interior of img.
    rng = np.random.default_rng(5)
    base = rng.uniform(0, 255, (20, 20))
    b = 4
    inner = b - max(abs(dx), abs(dy))
    other = base.copy()
    mask = np.zeros((20, 20), dtype=bool)
    mask[inner : 20 - inner, inner : 20 - inner] = True
    other[~mask] += 1000.0
    u = MotionVector(dx, dy)
    out1 = crop_center(translate(ImagePlane(base), u), b)
    out2 = crop_center(translate(ImagePlane(other), u), b)
    assert np.array_equal(out1.data, out2.data)


def test_translate_all_out_of_range():
    plane = ImagePlane(np.ones((3, 3)))
    out = translate(plane, MotionVector(5, 0))
    assert np.isnan(out.data).all()
