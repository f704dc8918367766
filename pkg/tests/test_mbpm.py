import numpy as np
import pytest

from busyquiet.clip import VideoClip
from busyquiet.errors import DimensionError, StateError
from busyquiet.kernels import log_values
from busyquiet.mbpm import (
    bandpass_direct,
    count_macs,
    count_params,
    finite_diff_check,
    init_mbpm,
    mac_breakdown,
    mbpm_backward,
    mbpm_forward,
    sum_squares_loss,
)

from _reference import ref_conv1d_temporal, ref_conv2d_cw


def random_clip(t, c, h, w, seed=0):
    rng = np.random.default_rng(seed)
    return VideoClip(rng.uniform(0.0, 1.0, size=(t, c, h, w)))


class TestForward:
    def test_static_clip_annihilated(self):
        frame = np.random.default_rng(4).uniform(size=(3, 8, 8))
        clip = VideoClip(np.repeat(frame[None], 9, axis=0))
        gamma = mbpm_forward(clip, init_mbpm(1.1, 9, 3, 3))
        assert np.abs(gamma.data).max() <= 1e-6

    def test_temporal_reduction_9_to_3(self):
        gamma = mbpm_forward(random_clip(9, 3, 12, 12), init_mbpm(1.1, 9, 3, 3))
        assert gamma.shape == (3, 3, 12, 12)

    def test_stride1_keeps_length(self):
        gamma = mbpm_forward(random_clip(5, 2, 6, 6), init_mbpm(0.9, 7, 2, 1))
        assert gamma.shape == (5, 2, 6, 6)

    def test_channel_mismatch(self):
        with pytest.raises(DimensionError):
            mbpm_forward(random_clip(3, 2, 4, 4), init_mbpm(1.1, 9, 3, 3))

    def test_linearity(self):
        params = init_mbpm(1.1, 9, 2, 3)
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, (6, 2, 10, 10))
        y = rng.uniform(-1, 1, (6, 2, 10, 10))
        a, b = 1.7, -0.6
        lhs = mbpm_forward(VideoClip(a * x + b * y), params).data
        rhs = a * mbpm_forward(VideoClip(x), params).data + b * mbpm_forward(VideoClip(y), params).data
        assert np.abs(lhs - rhs).max() <= 1e-6

    def test_matches_scalar_reference_composition(self):
        clip = random_clip(6, 2, 7, 7, seed=17)
        params = init_mbpm(0.9, 3, 2, 3)
        gamma = mbpm_forward(clip, params)
        filtered = ref_conv2d_cw(clip.data, params.spatial_weights)
        expected = ref_conv1d_temporal(filtered, params.temporal_weights, 3, "valid-aligned")
        np.testing.assert_allclose(gamma.data, expected, rtol=0, atol=1e-10)


class TestDirectEquivalence:
    @pytest.mark.parametrize("seed", range(6))
    def test_separable_equals_direct_stride3(self, seed):
        rng = np.random.default_rng(seed)
        t = 3 * int(rng.integers(1, 5))
        c = int(rng.integers(1, 4))
        h = int(rng.integers(8, 65))
        w = int(rng.integers(8, 65))
        clip = VideoClip(rng.uniform(0.0, 1.0, size=(t, c, h, w)))
        gamma = mbpm_forward(clip, init_mbpm(1.1, 9, c, 3))
        direct = bandpass_direct(clip, 1.1, 9, 3)
        assert np.abs(gamma.data - direct.data).max() <= 1e-5

    @pytest.mark.parametrize("sigma,k", [(0.9, 7), (0.9, 3), (1.1, 3)])
    def test_other_settings(self, sigma, k):
        clip = random_clip(6, 3, 20, 20, seed=5)
        gamma = mbpm_forward(clip, init_mbpm(sigma, k, 3, 3))
        direct = bandpass_direct(clip, sigma, k, 3)
        assert np.abs(gamma.data - direct.data).max() <= 1e-5

    def test_stride1_replicate(self):
        clip = random_clip(5, 2, 12, 12, seed=6)
        gamma = mbpm_forward(clip, init_mbpm(0.9, 7, 2, 1))
        direct = bandpass_direct(clip, 0.9, 7, 1)
        assert np.abs(gamma.data - direct.data).max() <= 1e-5

    def test_direct_static_zero(self):
        frame = np.random.default_rng(8).uniform(size=(1, 6, 6))
        clip = VideoClip(np.repeat(frame[None], 6, axis=0))
        direct = bandpass_direct(clip, 1.1, 9, 3)
        assert np.abs(direct.data).max() <= 1e-12

    def test_impulse_response_is_scaled_log_stencil(self):
        # bright pixel in the middle frame of 3: output = 2/3 * normalized LoG
        # stencil centered at that pixel (the neighbor frames contribute zero)
        h = w = 13
        data = np.zeros((3, 1, h, w))
        data[1, 0, 6, 6] = 1.0
        direct = bandpass_direct(VideoClip(data), 1.1, 9, 3)
        grid = log_values(1.1, 9)
        grid = grid / grid.sum()
        expected = np.zeros((h, w))
        expected[2:11, 2:11] = (2.0 / 3.0) * grid
        # sum1 amplifies the kernel ~1300x here; the only deviation allowed is
        # summation-order noise in the independently computed normalizer
        np.testing.assert_allclose(direct.data[0, 0], expected, rtol=0, atol=1e-9)

    def test_norm_mode_none_matches(self):
        clip = random_clip(6, 1, 16, 16, seed=7)
        gamma = mbpm_forward(clip, init_mbpm(1.1, 9, 1, 3, norm_mode="none"))
        direct = bandpass_direct(clip, 1.1, 9, 3, norm_mode="none")
        assert np.abs(gamma.data - direct.data).max() <= 1e-5


class TestBackward:
    def test_requires_trainable_forward(self):
        params = init_mbpm(1.1, 9, 1, 3)
        mbpm_forward(random_clip(3, 1, 8, 8), params)
        with pytest.raises(StateError):
            mbpm_backward(np.zeros((1, 1, 8, 8)), params)

    def test_zero_grad_output_gives_zero_gradients(self):
        params = init_mbpm(1.1, 5, 2, 3, trainable=True)
        clip = random_clip(6, 2, 8, 8, seed=1)
        gamma = mbpm_forward(clip, params)
        grads = mbpm_backward(np.zeros_like(gamma.data), params)
        assert np.abs(grads.d_spatial).max() == 0.0
        assert np.abs(grads.d_temporal).max() == 0.0
        assert np.abs(grads.d_input).max() == 0.0

    def test_input_gradient_of_sum_with_delta_spatial_kernel(self):
        # with a 1x1 delta spatial kernel and loss sum(gamma), d_input is the
        # transposed temporal stencil: each input frame receives its tap value
        # summed over the windows that touch it
        params = init_mbpm(1.1, 3, 1, 3, trainable=True)
        params.spatial_weights[:] = 0.0
        params.spatial_weights[0, 1, 1] = 1.0
        clip = random_clip(6, 1, 4, 4, seed=2)
        gamma = mbpm_forward(clip, params)
        grads = mbpm_backward(np.ones_like(gamma.data), params)
        taps = [-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0]
        for tt in range(6):
            np.testing.assert_allclose(grads.d_input[tt], taps[tt % 3], rtol=0, atol=1e-12)

    def test_grad_shapes(self):
        params = init_mbpm(0.9, 7, 3, 1, trainable=True)
        clip = random_clip(4, 3, 6, 5, seed=3)
        gamma = mbpm_forward(clip, params)
        grads = mbpm_backward(gamma, params)
        assert grads.d_spatial.shape == (3, 7, 7)
        assert grads.d_temporal.shape == (3, 3)
        assert grads.d_input.shape == (4, 3, 6, 5)


class TestFiniteDifference:
    @pytest.mark.parametrize("stride", [3, 1])
    def test_init_params_random_clip(self, stride):
        t = 6 if stride == 3 else 4
        clip = random_clip(t, 2, 8, 8, seed=10 + stride)
        params = init_mbpm(0.9, 3, 2, stride)
        report = finite_diff_check(clip, params)
        assert report["max_rel_err"] <= 1e-3

    def test_zero_clip_all_zero(self):
        clip = VideoClip(np.zeros((6, 1, 6, 6)))
        report = finite_diff_check(clip, init_mbpm(1.1, 3, 1, 3))
        assert report["max_rel_err"] == 0.0

    def test_after_gradient_steps(self):
        clip = random_clip(6, 1, 8, 8, seed=12)
        params = init_mbpm(0.9, 3, 1, 3, trainable=True)
        for _ in range(10):
            gamma = mbpm_forward(clip, params)
            _, dgamma = sum_squares_loss(gamma)
            grads = mbpm_backward(dgamma, params)
            params.spatial_weights -= 1e-4 * grads.d_spatial
            params.temporal_weights -= 1e-4 * grads.d_temporal
        report = finite_diff_check(clip, params)
        assert report["max_rel_err"] <= 1e-3


class TestCounts:
    def test_param_count_paper_config(self):
        assert count_params(init_mbpm(1.1, 9, 3, 3)) == 252

    def test_param_count_tiny(self):
        assert count_params(init_mbpm(1.1, 3, 1, 3)) == 12

    def test_macs_paper_config(self):
        params = init_mbpm(1.1, 9, 3, 3)
        spatial, temporal = mac_breakdown(params, (24, 3, 224, 224))
        assert spatial == 24 * 3 * 224 * 224 * 81 == 292_626_432
        assert temporal == 8 * 3 * 224 * 224 * 3 == 3_612_672
        assert count_macs(params, (24, 3, 224, 224)) == 296_239_104

    def test_macs_tiny(self):
        params = init_mbpm(1.1, 3, 1, 3)
        assert count_macs(params, (3, 1, 1, 1)) == 30

    def test_macs_stride1(self):
        params = init_mbpm(0.9, 7, 2, 1)
        assert count_macs(params, (4, 2, 8, 8)) == 4 * 2 * 64 * 49 + 4 * 2 * 64 * 3

    def test_macs_channel_mismatch(self):
        with pytest.raises(DimensionError):
            count_macs(init_mbpm(1.1, 9, 3, 3), (24, 4, 32, 32))

    def test_macs_indivisible_time(self):
        with pytest.raises(DimensionError):
            count_macs(init_mbpm(1.1, 9, 3, 3), (25, 3, 32, 32))
