import math

import numpy as np
import pytest

from conftest import noise_image, textured_image
from kltjnd import PsychometricParams, jnd_to_vdp, map_rmse, psychometric, vdp_rmse


class TestPsychometric:
    def test_anchors(self):
        assert psychometric(0.0) == 0.0
        assert psychometric(1.0) == pytest.approx(0.5, abs=1e-15)

    def test_ratio_two(self):
        expected = 1.0 - math.exp(math.log(0.5) * 2.0**3.5)
        assert expected == pytest.approx(0.99961, abs=5e-6)
        assert psychometric(2.0) == pytest.approx(expected, abs=1e-15)

    def test_monotone(self):
        grid = np.linspace(0.0, 10.0, 10_000)
        values = psychometric(grid)
        assert np.all(np.diff(values) >= 0.0)
        assert values[-1] > 0.999999

    def test_saturates_for_huge_ratios(self):
        assert psychometric(1e8) == 1.0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            psychometric(-0.1)
        with pytest.raises(ValueError):
            PsychometricParams(beta_slope=0.0)

    def test_custom_slope_keeps_halfpoint(self):
        assert psychometric(1.0, PsychometricParams(beta_slope=1.7)) == pytest.approx(0.5)


class TestJndToVdp:
    def test_no_distortion_zero_probability(self):
        img = textured_image(32, 24, 1)
        m = noise_image(32, 24, 2, high=4.0) + 0.5
        assert np.array_equal(jnd_to_vdp(img, img.copy(), m), np.zeros_like(img))

    def test_distortion_at_threshold_is_half(self):
        img = noise_image(16, 16, 3, low=10.0, high=240.0)
        m = noise_image(16, 16, 4, high=3.0) + 0.25
        out = jnd_to_vdp(img, img + m, m)
        assert np.allclose(out, 0.5)

    def test_matches_scalar_oracle(self):
        img = noise_image(11, 7, 5)
        dist = noise_image(11, 7, 6)
        m = noise_image(11, 7, 7, high=6.0)
        out = jnd_to_vdp(img, dist, m)
        for i in range(7):
            for j in range(11):
                ratio = abs(dist[i, j] - img[i, j]) / max(m[i, j], 1e-6)
                expected = 1.0 - math.exp(math.log(0.5) * ratio**3.5)
                assert out[i, j] == pytest.approx(expected, abs=1e-12)

    def test_swap_invariance(self):
        a = noise_image(9, 9, 8)
        b = noise_image(9, 9, 9)
        m = noise_image(9, 9, 10, high=5.0) + 0.1
        assert np.array_equal(jnd_to_vdp(a, b, m), jnd_to_vdp(b, a, m))

    def test_monotone_in_distortion(self):
        img = np.full((12, 12), 100.0)
        m = noise_image(12, 12, 11, high=4.0) + 0.5
        delta = noise_image(12, 12, 12, high=3.0)
        small = jnd_to_vdp(img, img + delta, m)
        large = jnd_to_vdp(img, img + 2.0 * delta, m)
        assert np.all(large >= small)

    def test_zero_threshold_flags_any_change(self):
        img = np.full((8, 8), 100.0)
        out = jnd_to_vdp(img, img + 0.01, np.zeros_like(img))
        assert np.all(out > 0.999)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            jnd_to_vdp(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 5)))


class TestVdpRmse:
    def test_identical_maps(self):
        m = np.clip(noise_image(10, 10, 13, high=1.0), 0.0, 1.0)
        assert vdp_rmse(m, m.copy()) == 0.0

    def test_constant_offset(self):
        assert vdp_rmse(np.full((5, 5), 0.5), np.zeros((5, 5))) == pytest.approx(0.5)

    def test_agrees_with_map_rmse(self):
        a = np.clip(noise_image(14, 9, 14, high=1.0), 0.0, 1.0)
        b = np.clip(noise_image(14, 9, 15, high=1.0), 0.0, 1.0)
        assert vdp_rmse(a, b) == pytest.approx(map_rmse(a, b), abs=1e-15)

    def test_rejects_out_of_range(self):
        good = np.zeros((3, 3))
        with pytest.raises(ValueError):
            vdp_rmse(good, np.full((3, 3), 1.5))
        with pytest.raises(ValueError):
            vdp_rmse(good - 0.1, good)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            vdp_rmse(np.zeros((3, 3)), np.zeros((4, 3)))
