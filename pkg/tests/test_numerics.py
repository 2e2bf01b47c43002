import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slicedet.numerics import (
    Conv1dKernel,
    EcaConfig,
    asff_fuse,
    asff_level,
    conv1d_same,
    eca_forward,
    eca_kernel_size,
    global_avg_pool,
    normalize_fusion_weights,
    resize_to,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestEcaKernelSize:
    @pytest.mark.parametrize("channels,k", [(8, 3), (64, 3), (256, 5), (512, 5)])
    def test_table(self, channels, k):
        assert eca_kernel_size(channels, EcaConfig(2, 1)) == k

    def test_larger_channels(self):
        # (log2(1024) + 1) / 2 = 5.5 -> 5; (log2(4096) + 1) / 2 = 6.5 -> 6 -> 7
        assert eca_kernel_size(1024) == 5
        assert eca_kernel_size(4096) == 7

    def test_floor_of_three(self):
        assert eca_kernel_size(1) == 3

    def test_rejects(self):
        with pytest.raises(ValueError):
            eca_kernel_size(0)
        with pytest.raises(ValueError):
            EcaConfig(gamma=0)

    @given(st.floats(0.5, 4), st.floats(-2, 4))
    def test_odd_and_monotone(self, gamma, b):
        cfg = EcaConfig(gamma, b)
        ks = [eca_kernel_size(c, cfg) for c in range(1, 3000, 7)]
        assert all(k % 2 == 1 and k >= 3 for k in ks)
        assert ks == sorted(ks)


class TestGlobalAvgPool:
    def test_ones(self):
        np.testing.assert_array_equal(global_avg_pool(np.ones((3, 4, 5))), np.ones(3))

    def test_ramp(self):
        x = np.arange(4, dtype=float).reshape(1, 2, 2)
        assert global_avg_pool(x)[0] == 1.5

    def test_single_pixel(self):
        x = np.array([[[2.0]], [[-3.0]]])
        np.testing.assert_array_equal(global_avg_pool(x), [2.0, -3.0])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            global_avg_pool(np.full((1, 1, 1), np.nan))


class TestConv1d:
    def test_identity(self):
        v = np.array([1.0, -2.0, 3.5, 4.0])
        np.testing.assert_array_equal(conv1d_same(v, Conv1dKernel.identity(5)), v)

    def test_zero(self):
        np.testing.assert_array_equal(conv1d_same(np.arange(4.0), Conv1dKernel(np.zeros(3))), 0)

    def test_box_filter(self):
        out = conv1d_same(np.array([1.0, 2.0, 3.0]), Conv1dKernel(np.ones(3)))
        np.testing.assert_array_equal(out, [3.0, 6.0, 5.0])

    def test_weight_order(self):
        # out[c] = w0 * v[c-1] + w1 * v[c] + w2 * v[c+1]
        out = conv1d_same(np.array([0.0, 1.0, 0.0]), Conv1dKernel(np.array([1.0, 2.0, 3.0])))
        np.testing.assert_array_equal(out, [3.0, 2.0, 1.0])

    def test_kernel_wider_than_input(self):
        out = conv1d_same(np.array([1.0, 2.0]), Conv1dKernel(np.ones(7)))
        np.testing.assert_array_equal(out, [3.0, 3.0])

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            Conv1dKernel(np.ones(4))

    def test_matches_numpy_correlate(self):
        rng = np.random.default_rng(1)
        v, w = rng.normal(size=17), rng.normal(size=5)
        expected = np.correlate(np.pad(v, 2), w, mode="valid")
        np.testing.assert_allclose(conv1d_same(v, Conv1dKernel(w)), expected, atol=1e-13)


class TestEcaForward:
    def test_zero_kernel_halves(self):
        x = np.random.default_rng(0).normal(size=(4, 3, 3))
        np.testing.assert_array_equal(eca_forward(x, Conv1dKernel(np.zeros(3))), 0.5 * x)

    def test_ones_identity_kernel(self):
        out = eca_forward(np.ones((4, 2, 2)), Conv1dKernel.identity(3))
        np.testing.assert_allclose(out, 0.7310585786300049, atol=1e-15)

    def test_zero_input(self):
        np.testing.assert_array_equal(eca_forward(np.zeros((3, 2, 2)), Conv1dKernel(np.ones(3))), 0)

    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4), st.integers(1, 4)),
                  elements=finite),
           arrays(np.float64, 3, elements=st.floats(-5, 5)))
    def test_gating_shrinks(self, x, w):
        out = eca_forward(x, Conv1dKernel(w))
        assert out.shape == x.shape
        assert np.all(np.abs(out) <= np.abs(x))
        assert np.all(np.sign(out) * np.sign(x) >= 0)


class TestResize:
    def test_upsample_blocks(self):
        x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        expected = np.array([[[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]]], float)
        np.testing.assert_array_equal(resize_to(x, 4, 4), expected)

    def test_identity(self):
        x = np.random.default_rng(0).normal(size=(2, 3, 5))
        assert resize_to(x, 3, 5).tobytes() == x.tobytes()

    def test_downsample_picks(self):
        x = np.arange(16, dtype=float).reshape(1, 4, 4)
        np.testing.assert_array_equal(resize_to(x, 2, 2), [[[0, 2], [8, 10]]])

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 3))
    def test_up_down_roundtrip(self, h, w, c):
        x = np.random.default_rng(h * 100 + w).normal(size=(c, h, w))
        np.testing.assert_array_equal(resize_to(resize_to(x, 2 * h, 2 * w), h, w), x)

    def test_bad_target(self):
        with pytest.raises(ValueError):
            resize_to(np.ones((1, 2, 2)), 0, 2)


class TestFusionWeights:
    def test_equal_logits(self):
        w = normalize_fusion_weights(np.full((3, 2, 2), 0.7))
        np.testing.assert_allclose(w, 1 / 3, atol=1e-15)

    def test_saturation(self):
        logits = np.array([20.0, -20.0, -20.0]).reshape(3, 1, 1)
        np.testing.assert_allclose(normalize_fusion_weights(logits).ravel(), [1, 0, 0], atol=1e-9)

    @given(arrays(np.float64, (3, 2, 3), elements=st.floats(-50, 50)), st.floats(-100, 100))
    def test_shift_invariant_and_normalized(self, z, c):
        w = normalize_fusion_weights(z)
        assert np.all(w >= 0)
        np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-9)
        np.testing.assert_allclose(normalize_fusion_weights(z + c), w, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            normalize_fusion_weights(np.zeros((2, 3, 3)))


_rng = np.random.default_rng(5)


class TestAsffFuse:
    rng = _rng
    x1, x2, x3 = _rng.normal(size=(3, 2, 3, 4))

    def test_degenerate_weights(self):
        w = np.zeros((3, 3, 4))
        w[0] = 1.0
        assert asff_fuse(self.x1, self.x2, self.x3, w).tobytes() == self.x1.tobytes()

    def test_equal_weights_mean(self):
        w = np.full((3, 3, 4), 1 / 3)
        np.testing.assert_allclose(asff_fuse(self.x1, self.x2, self.x3, w),
                                   (self.x1 + self.x2 + self.x3) / 3, atol=1e-14)

    def test_equal_inputs(self):
        w = normalize_fusion_weights(self.rng.normal(size=(3, 3, 4)))
        np.testing.assert_allclose(asff_fuse(self.x1, self.x1, self.x1, w), self.x1, rtol=1e-15, atol=0)

    def test_weights_broadcast_over_channels(self):
        w = normalize_fusion_weights(self.rng.normal(size=(3, 3, 4)))
        out = asff_fuse(self.x1, self.x2, self.x3, w)
        for c in range(2):
            expected = w[0] * self.x1[c] + w[1] * self.x2[c] + w[2] * self.x3[c]
            np.testing.assert_array_equal(out[c], expected)

    def test_mismatch_rejected(self):
        with pytest.raises(ValueError):
            asff_fuse(self.x1, self.x2[:, :2], self.x3, np.zeros((3, 3, 4)))
        with pytest.raises(ValueError):
            asff_fuse(self.x1, self.x2, self.x3, np.zeros((3, 2, 4)))

    def test_level_fusion_resizes(self):
        feats = [self.rng.normal(size=(2, 8, 8)), self.rng.normal(size=(2, 4, 4)),
                 self.rng.normal(size=(2, 2, 2))]
        out = asff_level(feats, 2, np.zeros((3, 2, 2)))
        expected = (resize_to(feats[0], 2, 2) + resize_to(feats[1], 2, 2) + feats[2]) / 3
        np.testing.assert_allclose(out, expected, atol=1e-14)
