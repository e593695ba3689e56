import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from wfmeasure.errors import ParameterError, ShapeError
from wfmeasure.grid import (
    INF,
    as_mask,
    as_prediction,
    convolve_same,
    make_gaussian_kernel,
    min_squared_distance_field,
)
from wfmeasure.params import ExponentForm

CENTER_SIGMA_225 = 0.17730768017841453  # (2 pi 2.25^2)^(-1/2)


class TestKernel:
    def test_default_kernel_shape_and_center(self):
        k = make_gaussian_kernel(9, 2.25, ExponentForm.SQUARED_DISTANCE)
        assert k.weights.shape == (19, 19)
        assert k.center_weight == pytest.approx(CENTER_SIGMA_225, rel=1e-12)
        assert k.center_weight == pytest.approx(0.17731, abs=5e-6)

    @pytest.mark.parametrize("form", list(ExponentForm))
    @pytest.mark.parametrize("theta,sigma", [(1, 0.25), (3, 0.75), (9, 2.25), (4, 3.0)])
    def test_symmetry_and_positivity(self, theta, sigma, form):
        w = make_gaussian_kernel(theta, sigma, form).weights
        np.testing.assert_array_equal(w, w[::-1, :])
        np.testing.assert_array_equal(w, w[:, ::-1])
        np.testing.assert_array_equal(w, w.T)
        assert np.all(w > 0)
        assert w[theta, theta] == pytest.approx((2 * math.pi * sigma**2) ** -0.5, rel=1e-12)

    def test_entries_follow_formula(self):
        sigma = 2.25
        sq = make_gaussian_kernel(9, sigma, ExponentForm.SQUARED_DISTANCE).weights
        lin = make_gaussian_kernel(9, sigma, ExponentForm.DISTANCE).weights
        for p, q in [(0, 3), (2, -5), (-9, 9), (4, 4)]:
            d2 = p * p + q * q
            assert sq[9 + p, 9 + q] == pytest.approx(oracles.gauss(d2, sigma, squared=True), rel=1e-13)
            assert lin[9 + p, 9 + q] == pytest.approx(oracles.gauss(d2, sigma, squared=False), rel=1e-13)

    def test_not_normalised(self):
        w = make_gaussian_kernel(9, 2.25).weights
        # the unnormalised 2-D Gaussian sums to roughly sqrt(2 pi sigma^2)
        assert w.sum() == pytest.approx(math.sqrt(2 * math.pi * 2.25**2), rel=1e-3)

    def test_boundary_ring_truncation_bound(self):
        for theta in (4, 8, 9, 12):
            w = make_gaussian_kernel(theta, theta / 4.0).weights
            ring = np.concatenate([w[0], w[-1], w[:, 0], w[:, -1]])
            assert ring.max() <= math.exp(-8) * w[theta, theta] * (1 + 1e-12)

    @pytest.mark.parametrize("theta,sigma", [(0, 1.0), (2, 0.0), (2, -1.0), (1.5, 1.0)])
    def test_invalid(self, theta, sigma):
        with pytest.raises(ParameterError):
            make_gaussian_kernel(theta, sigma)


class TestConvolve:
    def test_zero_input(self):
        k = make_gaussian_kernel(9, 2.25)
        np.testing.assert_array_equal(convolve_same(np.zeros((7, 11)), k), 0.0)

    def test_delta_reproduces_kernel(self):
        k = make_gaussian_kernel(9, 2.25)
        img = np.zeros((21, 21))
        img[10, 10] = 1.0
        out = convolve_same(img, k)
        np.testing.assert_allclose(out[1:20, 1:20], k.weights, rtol=0, atol=1e-15)
        np.testing.assert_array_equal(out[0], 0.0)
        np.testing.assert_array_equal(out[:, 20], 0.0)

    def test_zero_padding_counts(self):
        out = convolve_same(np.ones((3, 3)), np.ones((3, 3)))
        np.testing.assert_array_equal(out, [[4, 6, 4], [6, 9, 6], [4, 6, 4]])

    def test_matches_loop_oracle(self, rng):
        img = rng.uniform(size=(9, 13))
        w = make_gaussian_kernel(3, 1.1).weights
        np.testing.assert_allclose(convolve_same(img, w), oracles.correlate(img.tolist(), w.tolist()), rtol=1e-12)

    def test_rejects_even_kernel(self):
        with pytest.raises(ShapeError):
            convolve_same(np.ones((4, 4)), np.ones((2, 2)))

    @settings(max_examples=40, deadline=None)
    @given(
        x=arrays(np.float64, (12, 10), elements=st.floats(-10, 10)),
        z=arrays(np.float64, (12, 10), elements=st.floats(-10, 10)),
        a=st.floats(-3, 3),
        b=st.floats(-3, 3),
    )
    def test_linearity(self, x, z, a, b):
        k = make_gaussian_kernel(2, 0.8)
        lhs = convolve_same(a * x + b * z, k)
        rhs = a * convolve_same(x, k) + b * convolve_same(z, k)
        scale = max(1.0, np.abs(lhs).max())
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10 * scale)


class TestDistanceField:
    def test_foreground_is_zero(self, rng):
        y = (rng.uniform(size=(10, 10)) > 0.6).astype(float)
        d = min_squared_distance_field(y, 3)
        np.testing.assert_array_equal(d[y == 1], 0.0)
        assert np.all(d[y == 0] > 0)

    def test_single_pixel_example(self):
        y = np.zeros((12, 12))
        y[5, 5] = 1
        d = min_squared_distance_field(y, 5)
        assert d[5, 8] == 9
        assert d[10, 10] == 50  # corner of the window: 5^2 + 5^2
        assert d[11, 5] == INF  # 6 rows away, outside the window

    def test_empty_window_is_inf(self):
        y = np.zeros((20, 20))
        y[0, 0] = 1
        d = min_squared_distance_field(y, 5)
        assert d[19, 19] == INF and np.isinf(d[6, 0])

    def test_all_background(self):
        assert np.all(np.isinf(min_squared_distance_field(np.zeros((4, 5)), 2)))

    @settings(max_examples=60, deadline=None)
    @given(
        y=st.integers(1, 32).flatmap(
            lambda h: st.integers(1, 32).flatmap(lambda w: arrays(np.float64, (h, w), elements=st.sampled_from([0.0, 1.0])))
        ),
        phi=st.integers(1, 6),
    )
    def test_matches_exhaustive_search(self, y, phi):
        d = min_squared_distance_field(y, phi)
        ref = np.array(oracles.distance_field(y.astype(int).tolist(), phi))
        np.testing.assert_array_equal(d, ref)
        finite = d[np.isfinite(d)]
        assert np.all(finite <= 2 * phi * phi)


class TestValidation:
    def test_mask_rejects_non_binary(self):
        with pytest.raises(ShapeError):
            as_mask([[0, 0.5]])

    def test_prediction_rejects_out_of_range(self):
        with pytest.raises(ShapeError):
            as_prediction([[0, 1.01]])

    def test_rejects_1d(self):
        with pytest.raises(ShapeError):
            as_prediction([0.1, 0.2])
