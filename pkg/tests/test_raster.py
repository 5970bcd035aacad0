"""Tests for containers, luminance, binarization, and Otsu level selection."""

import numpy as np
import pytest

from oracles import binarize_oracle, luminance_oracle, otsu_within_class_argmin
from potholemap.raster import (
    BinaryImage,
    DimensionError,
    GrayImage,
    Level,
    NoThresholdError,
    RgbImage,
    binarize,
    luminance,
    otsu_level,
)


def rgb(*rows):
    return RgbImage(np.array(rows, dtype=np.uint8))


class TestContainers:
    def test_gray_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GrayImage(np.array([[0.5, 1.2]]))
        with pytest.raises(ValueError):
            GrayImage(np.array([[-0.1, 0.5]]))

    def test_gray_rejects_wrong_shape(self):
        with pytest.raises(DimensionError):
            GrayImage(np.zeros((4,)))
        with pytest.raises(DimensionError):
            GrayImage(np.zeros((0, 4)))

    def test_rgb_rejects_wrong_shape(self):
        with pytest.raises(DimensionError):
            RgbImage(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(DimensionError):
            RgbImage(np.zeros((4, 4, 4), dtype=np.uint8))

    def test_rgb_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            RgbImage(np.full((2, 2, 3), 300, dtype=np.int32))

    def test_binary_counts(self):
        img = BinaryImage(np.array([[True, False], [True, True]]))
        assert img.foreground_count() == 3
        assert img.foreground_fraction() == 0.75
        assert img.height == 2 and img.width == 2

    def test_level_bounds(self):
        Level(0.0)
        Level(1.0)
        with pytest.raises(ValueError):
            Level(1.01)
        with pytest.raises(ValueError):
            Level(-0.01)


class TestLuminance:
    def test_pure_red(self):
        img = rgb([[255, 0, 0]])
        assert luminance(img).pixels[0, 0] == pytest.approx(0.299, abs=1e-12)

    def test_gray_pixel_equals_value_over_255(self):
        for v in range(256):
            img = rgb([[v, v, v]])
            assert abs(luminance(img).pixels[0, 0] - v / 255.0) < 1e-9

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(11)
        px = rng.integers(0, 256, (6, 5, 3), dtype=np.uint8)
        got = luminance(RgbImage(px)).pixels
        for r in range(6):
            for c in range(5):
                want = luminance_oracle(*px[r, c].tolist())
                assert abs(got[r, c] - want) < 1e-12

    def test_output_in_unit_interval(self):
        img = rgb([[255, 255, 255], [0, 0, 0]])
        y = luminance(img).pixels
        assert y.min() >= 0.0 and y.max() <= 1.0


class TestBinarize:
    def test_strict_inequality(self):
        img = GrayImage(np.array([[0.2, 0.6]]))
        out = binarize(img, Level(0.5))
        assert out.bits.tolist() == [[False, True]]
        # A pixel exactly at the level stays background.
        assert not binarize(GrayImage(np.array([[0.5]])), Level(0.5)).bits[0, 0]

    def test_ramp_at_level_030(self):
        ramp = GrayImage((np.arange(256, dtype=np.float64) / 255.0).reshape(16, 16))
        out = binarize(ramp, Level(0.3))
        # k/255 > 0.3 holds for k = 77..255.
        assert out.foreground_count() == 179

    def test_matches_oracle_on_random_images(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            px = rng.random((16, 16))
            lv = float(rng.random())
            got = binarize(GrayImage(px), Level(lv)).bits
            assert np.array_equal(got, binarize_oracle(px, lv))

    def test_level_monotonicity(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            img = GrayImage(rng.random((12, 12)))
            f08 = binarize(img, Level(0.8)).bits
            f05 = binarize(img, Level(0.5)).bits
            f03 = binarize(img, Level(0.3)).bits
            assert not (f08 & ~f05).any()
            assert not (f05 & ~f03).any()


class TestOtsu:
    def test_two_value_image_splits_between(self):
        px = np.full((16, 16), 0.2)
        px[:8] = 0.8
        lv = otsu_level(GrayImage(px))
        assert 0.2 < lv.value < 0.8

    def test_bimodal_gaussian_mixture(self):
        rng = np.random.default_rng(31)
        a = rng.normal(0.3, 0.05, 600)
        b = rng.normal(0.7, 0.05, 600)
        px = np.clip(np.concatenate([a, b]), 0.0, 1.0).reshape(30, 40)
        lv = otsu_level(GrayImage(px))
        assert 0.45 <= lv.value <= 0.55

    def test_constant_image_has_no_threshold(self):
        with pytest.raises(NoThresholdError):
            otsu_level(GrayImage(np.full((8, 8), 0.4)))

    def test_agrees_with_within_class_variance_oracle(self):
        # Maximizing between-class variance is the same as minimizing
        # within-class variance; the oracle computes the latter exactly.
        rng = np.random.default_rng(37)
        for _ in range(25):
            px = rng.random((12, 12))
            lv = otsu_level(GrayImage(px))
            hist = np.bincount(np.round(px * 255.0).astype(np.int64).ravel(), minlength=256)
            winners = otsu_within_class_argmin(hist)
            assert lv.value == (sum(winners) / len(winners)) / 255.0

    def test_binarizing_at_otsu_level_separates_modes(self):
        px = np.full((10, 10), 0.15)
        px[:, 5:] = 0.85
        lv = otsu_level(GrayImage(px))
        out = binarize(GrayImage(px), lv)
        assert out.foreground_count() == 50
