import numpy as np
import pytest

from mocapseg import (
    DataError,
    LabelTrack,
    MotionImage,
    export_png,
    import_png,
    motion_image_from_cartesian,
    normalize_to_rgb,
    render_label_strip,
    resize_vertical_bicubic,
)
from mocapseg.kinematics import CartesianSequence, GLOBAL
from mocapseg.motion_image import (
    channel_extrema,
    cubic_kernel,
    quantize_pixels,
    resample_matrix,
    resample_vertical,
)
from naive import naive_normalize

# Column [0, 10, 20, 30] resampled from 4 to 7 rows with the a=-0.5 cubic
# kernel, half-pixel centers, edge replication. Values computed once by an
# independent direct evaluation of the kernel sums and frozen here.
BICUBIC_4_TO_7 = [
    -0.6614431486880479,
    2.833454810495609,
    9.262026239067055,
    15.0,
    20.73797376093294,
    27.166545189504358,
    30.661443148688043,
]


def make_cart(positions):
    return CartesianSequence(positions=np.asarray(positions, dtype=np.float64),
                             coordinate_space=GLOBAL)


def test_normalize_matches_scalar_oracle():
    rng = np.random.default_rng(0)
    pos = rng.uniform(-50.0, 80.0, size=(5, 7, 3))
    out = normalize_to_rgb(make_cart(pos))
    assert np.allclose(out, naive_normalize(pos), atol=1e-12)
    assert out.min() >= 0.0 and out.max() <= 255.0
    for c in range(3):
        assert out[:, :, c].min() == 0.0
        assert out[:, :, c].max() == pytest.approx(255.0)


def test_normalize_degenerate_channel_is_zero():
    pos = np.zeros((3, 4, 3))
    pos[:, :, 0] = np.arange(12).reshape(3, 4)
    pos[:, :, 1] = 7.5  # constant: degenerate
    pos[:, :, 2] = -2.0
    out = normalize_to_rgb(make_cart(pos))
    assert np.array_equal(out[:, :, 1], np.zeros((3, 4)))
    assert np.array_equal(out[:, :, 2], np.zeros((3, 4)))
    assert out[:, :, 0].max() == 255.0


def test_channel_extrema():
    pos = np.zeros((2, 3, 3))
    pos[1, 2] = [5.0, -4.0, 9.0]
    pos[0, 0] = [-1.0, 6.0, 2.0]
    lo, hi = channel_extrema(make_cart(pos))
    assert np.array_equal(lo, [-1.0, -4.0, 0.0])
    assert np.array_equal(hi, [5.0, 6.0, 9.0])


def test_cubic_kernel_values():
    assert cubic_kernel(np.array([0.0]))[0] == 1.0
    assert cubic_kernel(np.array([1.0]))[0] == 0.0
    assert cubic_kernel(np.array([2.0]))[0] == 0.0
    assert cubic_kernel(np.array([-0.5]))[0] == cubic_kernel(np.array([0.5]))[0]
    # a = -0.5 member of the cubic family: k(0.5) = 0.5625
    assert cubic_kernel(np.array([0.5]))[0] == pytest.approx(0.5625, abs=1e-15)


def test_bicubic_frozen_column():
    image = np.repeat(np.array([0.0, 10.0, 20.0, 30.0])[:, None, None], 3, axis=2)
    out = resample_vertical(image, 7)
    for c in range(3):
        assert np.allclose(out[:, 0, c], BICUBIC_4_TO_7, atol=1e-12)


def test_bicubic_resize_clamps():
    image = np.repeat(np.array([0.0, 10.0, 20.0, 30.0])[:, None, None], 3, axis=2)
    resized = resize_vertical_bicubic(image, 7)
    assert isinstance(resized, MotionImage)
    assert resized.pixels[0, 0, 0] == 0.0  # unclamped value is negative
    assert resized.pixels[6, 0, 0] == pytest.approx(30.661443148688043, abs=1e-12)
    assert resized.source_height == 4


def test_resample_identity_when_sizes_match():
    rng = np.random.default_rng(1)
    image = rng.uniform(0.0, 255.0, size=(6, 5, 3))
    assert np.array_equal(resample_matrix(6, 6), np.eye(6))
    assert np.array_equal(resample_vertical(image, 6), image)


def test_resample_rows_sum_to_one():
    w = resample_matrix(10, 23)
    assert np.allclose(w.sum(axis=1), np.ones(23), atol=1e-12)
    w = resample_matrix(4, 224)
    assert np.allclose(w.sum(axis=1), np.ones(224), atol=1e-12)


def test_resample_is_linear():
    rng = np.random.default_rng(2)
    a = rng.uniform(0.0, 100.0, size=(8, 4, 3))
    b = rng.uniform(0.0, 100.0, size=(8, 4, 3))
    lhs = resample_vertical(2.0 * a + 3.0 * b, 13)
    rhs = 2.0 * resample_vertical(a, 13) + 3.0 * resample_vertical(b, 13)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_constant_image_resamples_to_constant():
    image = np.full((5, 6, 3), 41.0)
    out = resample_vertical(image, 17)
    assert np.allclose(out, 41.0, atol=1e-12)


def test_motion_image_from_cartesian_shape():
    rng = np.random.default_rng(3)
    pos = rng.uniform(-10.0, 10.0, size=(9, 12, 3))
    img = motion_image_from_cartesian(make_cart(pos), height=224)
    assert img.pixels.shape == (224, 12, 3)
    assert img.source_height == 9
    assert img.height == 224 and img.width == 12


def test_quantize_rounds_half_up():
    vals = np.array([[[0.0, 0.4999, 0.5], [127.5, 254.49, 254.5]]])
    q = quantize_pixels(vals)
    assert q.dtype == np.uint8
    assert q.tolist() == [[[0, 0, 1], [128, 254, 255]]]


def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    pixels = rng.uniform(0.0, 255.0, size=(11, 7, 3))
    img = MotionImage(pixels=pixels, source_height=11)
    path = tmp_path / "img.png"
    export_png(img, path)
    back = import_png(path)
    assert back.pixels.shape == (11, 7, 3)
    assert np.array_equal(back.pixels, quantize_pixels(pixels).astype(np.float64))
    assert np.max(np.abs(back.pixels - pixels)) <= 0.5


def test_motion_image_validation():
    with pytest.raises(DataError):
        MotionImage(pixels=np.zeros((4, 4)), source_height=4)
    with pytest.raises(DataError):
        MotionImage(pixels=np.full((2, 2, 3), 256.0), source_height=2)
    with pytest.raises(DataError):
        MotionImage(pixels=np.full((2, 2, 3), -0.5), source_height=2)
    img = MotionImage(pixels=np.zeros((2, 2, 3)), source_height=2)
    with pytest.raises(ValueError):
        img.pixels[0, 0, 0] = 1.0


def test_render_label_strip_colors():
    track = LabelTrack(classes=np.array([0, 1, 1]), class_count=2)
    strip = render_label_strip(track, 4, ["standing", "reach"])
    assert strip.shape == (4, 3, 3)
    assert np.array_equal(strip[:, 0, :], np.zeros((4, 3)))  # standing is black
    expected = np.array([1.0, 0.66, 0.07]) * 255.0
    assert np.allclose(strip[:, 1, :], np.tile(expected, (4, 1)))
    assert np.array_equal(strip[:, 1, :], strip[:, 2, :])


def test_render_label_strip_unknown_name_gray():
    track = LabelTrack(classes=np.array([0]), class_count=1)
    strip = render_label_strip(track, 2, ["wobble"])
    assert np.allclose(strip, 127.5)


def test_render_label_strip_short_names_rejected():
    track = LabelTrack(classes=np.array([0, 1]), class_count=2)
    with pytest.raises(DataError):
        render_label_strip(track, 2, ["standing"])
