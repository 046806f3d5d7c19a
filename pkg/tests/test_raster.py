"""Image IO, fiducial sampling, color correction, and color conversions."""

import colorsys

import numpy as np
import pytest

from wiltmetrics import raster
from wiltmetrics.errors import SingularSystemError, ValidationError


def _fiducial(squares=None, colors=None, side_cm=0.676, side_px=13.0):
    if squares is None:
        squares = [raster.FiducialSquare(10 + 20 * i, 10, 2) for i in range(9)]
    if colors is None:
        colors = np.arange(27, dtype=np.float64).reshape(9, 3)
    return raster.FiducialObservation(
        squares=squares, reference_colors=colors, square_side_cm=side_cm, square_side_px=side_px
    )


class TestValidation:
    def test_rgb_rejects_wrong_shape(self):
        with pytest.raises(ValidationError):
            raster.validate_rgb(np.zeros((4, 4), dtype=np.uint8))

    def test_rgb_rejects_wrong_dtype(self):
        with pytest.raises(ValidationError):
            raster.validate_rgb(np.zeros((4, 4, 3), dtype=np.float64))

    def test_rgb_rejects_empty(self):
        with pytest.raises(ValidationError):
            raster.validate_rgb(np.zeros((0, 4, 3), dtype=np.uint8))

    def test_mask_rejects_values_above_one(self):
        with pytest.raises(ValidationError):
            raster.validate_mask(np.full((4, 4), 2, dtype=np.uint8))

    def test_mask_rejects_3d(self):
        with pytest.raises(ValidationError):
            raster.validate_mask(np.zeros((4, 4, 3), dtype=np.uint8))

    def test_mask_accepts_bool(self):
        m = raster.validate_mask(np.ones((2, 2), dtype=bool))
        assert m.dtype == np.uint8 and m.sum() == 4


class TestIO:
    def test_image_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
        p = tmp_path / "img.png"
        raster.save_image(p, img)
        assert np.array_equal(raster.load_image(p), img)

    def test_mask_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        mask = (rng.random((15, 17)) > 0.5).astype(np.uint8)
        p = tmp_path / "mask.png"
        raster.save_mask(p, mask)
        assert np.array_equal(raster.load_mask(p), mask)


class TestFiducial:
    def test_needs_nine_squares(self):
        with pytest.raises(ValidationError):
            _fiducial(squares=[raster.FiducialSquare(0, 0, 1)] * 8)

    def test_reference_colors_shape(self):
        with pytest.raises(ValidationError):
            _fiducial(colors=np.zeros((3, 3)))

    def test_positive_side_lengths(self):
        with pytest.raises(ValidationError):
            _fiducial(side_cm=0.0)

    def test_sample_constant_squares(self):
        img = np.zeros((30, 200, 3), dtype=np.uint8)
        fm = _fiducial()
        for i, sq in enumerate(fm.squares):
            cx, cy = int(sq.centroid_x), int(sq.centroid_y)
            img[cy - 2 : cy + 3, cx - 2 : cx + 3] = (i, 2 * i, 3 * i)
        sampled = raster.sample_fiducial(img, fm)
        expected = np.array([[i, 2 * i, 3 * i] for i in range(9)], dtype=np.float64)
        assert np.allclose(sampled, expected)

    def test_sample_window_mean(self):
        # window mean, not center pixel
        img = np.zeros((30, 200, 3), dtype=np.uint8)
        fm = _fiducial()
        sq = fm.squares[0]
        cx, cy = int(sq.centroid_x), int(sq.centroid_y)
        img[cy - 2 : cy + 3, cx - 2 : cx + 3, 0] = 10
        img[cy, cx, 0] = 35  # one bright pixel raises the mean by 1
        sampled = raster.sample_fiducial(img, fm)
        assert sampled[0, 0] == pytest.approx(11.0)

    def test_out_of_bounds_names_square(self):
        img = np.zeros((30, 200, 3), dtype=np.uint8)
        squares = [raster.FiducialSquare(10 + 20 * i, 10, 2) for i in range(9)]
        squares[4] = raster.FiducialSquare(1, 10, 2)
        with pytest.raises(ValidationError, match="square 4"):
            raster.sample_fiducial(img, _fiducial(squares=squares))

    def test_pixel_resolution(self):
        res = raster.pixel_resolution(_fiducial(side_cm=0.676, side_px=13.0))
        assert res.cm_per_pixel == pytest.approx(0.052)


class TestColorTransform:
    def test_exact_recovery(self):
        rng = np.random.default_rng(2)
        c_image = rng.uniform(10, 240, size=(9, 3))
        m = np.eye(3) + rng.uniform(-0.1, 0.1, size=(3, 3))
        t = raster.estimate_color_transform(c_image, c_image @ m)
        assert np.abs(t.matrix - m).max() < 1e-9

    def test_rank_deficient(self):
        c_image = np.ones((9, 3)) * 100.0
        with pytest.raises(SingularSystemError):
            raster.estimate_color_transform(c_image, c_image)

    def test_shape_check(self):
        with pytest.raises(ValidationError):
            raster.estimate_color_transform(np.zeros((8, 3)), np.zeros((9, 3)))

    def test_apply_identity(self):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        out = raster.apply_color_transform(img, raster.ColorTransform.identity())
        assert np.array_equal(out, img)

    def test_apply_clamps(self):
        img = np.full((2, 2, 3), 200, dtype=np.uint8)
        out = raster.apply_color_transform(img, raster.ColorTransform(np.eye(3) * 2.0))
        assert out.max() == 255 and out.min() == 255

    def test_apply_rounds(self):
        img = np.full((1, 1, 3), 100, dtype=np.uint8)
        out = raster.apply_color_transform(img, raster.ColorTransform(np.eye(3) * 1.004))
        assert out[0, 0, 0] == 100  # 100.4 rounds down
        out = raster.apply_color_transform(img, raster.ColorTransform(np.eye(3) * 1.006))
        assert out[0, 0, 0] == 101


class TestColorSpaces:
    def test_hsv_against_colorsys(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            r, g, b = (int(v) for v in rng.integers(0, 256, size=3))
            h, s, v = raster.srgb_to_hsv((r, g, b))
            hh, ss, vv = colorsys.rgb_to_hsv(r / 255.0, g / 255.0, b / 255.0)
            assert h == pytest.approx(hh * 255.0, abs=1e-9)
            assert s == pytest.approx(ss * 255.0, abs=1e-9)
            assert v == pytest.approx(vv * 255.0, abs=1e-9)

    def test_hsv_gray_has_zero_hue_saturation(self):
        h, s, v = raster.srgb_to_hsv((77, 77, 77))
        assert h == 0.0 and s == 0.0 and v == 77.0

    def test_lab_against_skimage(self):
        skcolor = pytest.importorskip("skimage.color")
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        ours = raster.lab_planes(img)
        ref = skcolor.rgb2lab(img / 255.0)
        assert np.allclose(ours[..., 0], ref[..., 0] * 255.0 / 100.0, atol=0.2)
        assert np.allclose(ours[..., 1], ref[..., 1] + 128.0, atol=0.2)
        assert np.allclose(ours[..., 2], ref[..., 2] + 128.0, atol=0.2)

    def test_lab_white_point(self):
        l, a, b = raster.srgb_to_lab((255, 255, 255))
        # the sRGB matrix rows only approximate the D65 white point, so
        # pure white lands within ~1e-3 of the nominal scaled values
        assert l == pytest.approx(255.0, abs=1e-3)
        assert a == pytest.approx(128.0, abs=5e-3)
        assert b == pytest.approx(128.0, abs=5e-3)

    def test_lab_black(self):
        l, a, b = raster.srgb_to_lab((0, 0, 0))
        assert l == pytest.approx(0.0, abs=1e-9)
        assert a == pytest.approx(128.0, abs=1e-9)
        assert b == pytest.approx(128.0, abs=1e-9)
