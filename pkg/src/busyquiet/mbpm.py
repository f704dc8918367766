"""Motion band-pass module: separable forward pass, analytic reference, gradients.

The module chains a spatial per-channel LoG convolution with a 3-tap temporal
high-pass (stride 3 when distilling pathway inputs, stride 1 inside lateral
connections).  `bandpass_direct` evaluates the same band-pass straight from
its defining formula with an independent code path, and `mbpm_backward`
provides exact gradients for the two convolution stages so the taps can be
trained; `finite_diff_check` verifies them numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clip import DTYPE, VideoClip, channelwise_conv1d_temporal, channelwise_conv2d
from .errors import ConfigError, DimensionError, StateError
from .kernels import SpatialKernel, TemporalKernel, log_kernel, temporal_highpass_kernel


@dataclass
class _ForwardCache:
    """Intermediates kept by a trainable forward pass for the backward pass."""

    x: np.ndarray         # input (t, c, h, w)
    filtered: np.ndarray  # after the spatial stage (t, c, h, w)


@dataclass
class MbpmParams:
    """Trainable spatial + temporal filter state.

    stride 3 distills one output frame per three input frames (pathway
    inputs); stride 1 preserves the temporal size (lateral connections).
    The weight arrays are owned and writable; banks created from them are
    snapshots of the current values.
    """

    spatial_weights: np.ndarray   # (c, k, k) float64, writable
    temporal_weights: np.ndarray  # (c, 3) float64, writable
    sigma: float
    norm_mode: str
    stride: int
    trainable: bool = False
    _cache: _ForwardCache | None = field(default=None, repr=False, compare=False)

    @property
    def c(self) -> int:
        return self.spatial_weights.shape[0]

    @property
    def k(self) -> int:
        return self.spatial_weights.shape[1]

    def spatial_bank(self) -> SpatialKernel:
        return SpatialKernel(weights=self.spatial_weights, sigma=self.sigma, norm_mode=self.norm_mode)

    def temporal_bank(self) -> TemporalKernel:
        return TemporalKernel(weights=self.temporal_weights, stride=self.stride)

    def copy(self) -> "MbpmParams":
        return MbpmParams(
            spatial_weights=self.spatial_weights.copy(),
            temporal_weights=self.temporal_weights.copy(),
            sigma=self.sigma,
            norm_mode=self.norm_mode,
            stride=self.stride,
            trainable=self.trainable,
        )


def init_mbpm(
    sigma: float = 1.1,
    k: int = 9,
    c: int = 3,
    stride: int = 3,
    norm_mode: str = "sum1",
    trainable: bool = False,
) -> MbpmParams:
    """Fresh parameters: LoG-initialized spatial taps, [-1/3, 2/3, -1/3] temporal taps."""
    spatial = log_kernel(sigma, k, c, norm_mode)
    temporal = temporal_highpass_kernel(c, stride)
    return MbpmParams(
        spatial_weights=spatial.weights.copy(),
        temporal_weights=temporal.weights.copy(),
        sigma=float(sigma),
        norm_mode=norm_mode,
        stride=stride,
        trainable=trainable,
    )


def _boundary_for(stride: int) -> str:
    return "valid-aligned" if stride == 3 else "replicate"


def mbpm_forward(clip: VideoClip, params: MbpmParams) -> VideoClip:
    """Spatial LoG stage followed by the strided temporal high-pass (the busy signal).

    With stride 3 the output has clip.t / 3 frames; with stride 1 it keeps
    clip.t frames.  When params.trainable is set, the intermediates needed by
    mbpm_backward are cached on params (one trainer at a time).
    """
    if params.c != clip.c:
        raise DimensionError(f"params have {params.c} channels, clip has {clip.c}")
    filtered = channelwise_conv2d(clip, params.spatial_bank())
    gamma = channelwise_conv1d_temporal(
        filtered, params.temporal_bank(), stride=params.stride, boundary=_boundary_for(params.stride)
    )
    if params.trainable:
        params._cache = _ForwardCache(x=clip.data, filtered=filtered.data)
    return gamma


@dataclass
class MbpmGradients:
    """Gradients of a scalar loss with respect to the taps and the input clip."""

    d_spatial: np.ndarray   # (c, k, k)
    d_temporal: np.ndarray  # (c, 3)
    d_input: np.ndarray     # same shape as the forward input


def _spatial_windows(x: np.ndarray, k: int) -> np.ndarray:
    p = (k - 1) // 2
    padded = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    return np.lib.stride_tricks.sliding_window_view(padded, (k, k), axis=(2, 3))


def mbpm_backward(grad_output, params: MbpmParams) -> MbpmGradients:
    """Chain-rule gradients through the temporal then spatial stage.

    Requires a preceding mbpm_forward on the same params with trainable=True.
    grad_output may be a VideoClip or an array shaped like the forward output.
    """
    cache = params._cache
    if cache is None:
        raise StateError("mbpm_backward requires a prior trainable mbpm_forward on these params")
    g = grad_output.data if isinstance(grad_output, VideoClip) else np.asarray(grad_output, dtype=DTYPE)
    t, c, h, w = cache.x.shape
    k = params.k
    taps = params.temporal_weights

    if params.stride == 3:
        if g.shape != (t // 3, c, h, w):
            raise DimensionError(f"grad_output shape {g.shape} does not match output ({t//3},{c},{h},{w})")
        grouped = cache.filtered.reshape(t // 3, 3, c, h, w)
        d_temporal = np.einsum("xchw,xjchw->cj", g, grouped)
        d_filtered = (g[:, None] * taps.T[None, :, :, None, None]).reshape(t, c, h, w)
    else:
        if g.shape != (t, c, h, w):
            raise DimensionError(f"grad_output shape {g.shape} does not match output ({t},{c},{h},{w})")
        idx = np.arange(t)
        prev_idx = np.maximum(idx - 1, 0)
        next_idx = np.minimum(idx + 1, t - 1)
        d_temporal = np.stack(
            [
                np.einsum("tchw,tchw->c", g, cache.filtered[prev_idx]),
                np.einsum("tchw,tchw->c", g, cache.filtered),
                np.einsum("tchw,tchw->c", g, cache.filtered[next_idx]),
            ],
            axis=1,
        )
        d_filtered = np.zeros_like(cache.filtered)
        np.add.at(d_filtered, prev_idx, taps[None, :, 0, None, None] * g)
        d_filtered += taps[None, :, 1, None, None] * g
        np.add.at(d_filtered, next_idx, taps[None, :, 2, None, None] * g)

    x_windows = _spatial_windows(cache.x, k)
    d_spatial = np.einsum("tchwij,tchw->cij", x_windows, d_filtered)
    # grad wrt input: correlate the padded upstream grad with the 180-degree
    # rotated spatial taps (transpose of the zero-padded cross-correlation)
    g_windows = _spatial_windows(d_filtered, k)
    d_input = np.einsum("tchwij,cij->tchw", g_windows, params.spatial_weights[:, ::-1, ::-1])
    return MbpmGradients(d_spatial=d_spatial, d_temporal=d_temporal, d_input=d_input)


def bandpass_direct(clip: VideoClip, sigma: float, k: int, s: int, norm_mode: str = "sum1") -> VideoClip:
    """Reference band-pass evaluated straight from its definition.

    Per frame: accumulate the shifted-and-scaled input planes for every tap of
    a freshly sampled LoG grid (zero padding, same size).  Then combine frames
    with the fixed finite-difference weights 2/3 (center) and -1/3 (neighbors)
    at the stride-implied positions.  Shares no code with mbpm_forward.
    """
    if s not in (1, 3):
        raise ConfigError(f"stride must be 1 or 3, got {s}")
    if sigma <= 0 or k % 2 == 0 or k < 3:
        raise ConfigError(f"invalid LoG settings sigma={sigma}, k={k}")
    t, c, h, w = clip.shape
    if s == 3 and t % 3 != 0:
        raise DimensionError(f"clip length {t} is not divisible by stride 3")

    r = (k - 1) // 2
    grid = [
        [
            -math.exp(-(ix * ix + iy * iy) / (2.0 * sigma * sigma))
            / (math.pi * sigma**4)
            * (1.0 - (ix * ix + iy * iy) / (2.0 * sigma * sigma))
            for ix in range(-r, r + 1)
        ]
        for iy in range(-r, r + 1)
    ]
    if norm_mode == "sum1":
        total = sum(sum(row) for row in grid)
        grid = [[v / total for v in row] for row in grid]
    elif norm_mode == "l1":
        total = sum(sum(abs(v) for v in row) for row in grid)
        grid = [[v / total for v in row] for row in grid]
    elif norm_mode != "none":
        raise ConfigError(f"unknown norm_mode {norm_mode!r}")

    padded = np.pad(clip.data, ((0, 0), (0, 0), (r, r), (r, r)))
    filtered = np.zeros((t, c, h, w), dtype=DTYPE)
    for iy in range(k):
        for ix in range(k):
            filtered += grid[iy][ix] * padded[:, :, iy : iy + h, ix : ix + w]

    if s == 3:
        out = np.empty((t // 3, c, h, w), dtype=DTYPE)
        for tp in range(t // 3):
            mid = 3 * tp + 1
            out[tp] = (2.0 / 3.0) * filtered[mid] - (1.0 / 3.0) * filtered[mid - 1] - (1.0 / 3.0) * filtered[mid + 1]
    else:
        out = np.empty((t, c, h, w), dtype=DTYPE)
        for tt in range(t):
            out[tt] = (
                (2.0 / 3.0) * filtered[tt]
                - (1.0 / 3.0) * filtered[max(tt - 1, 0)]
                - (1.0 / 3.0) * filtered[min(tt + 1, t - 1)]
            )
    return VideoClip(out, copy=False)


def sum_squares_loss(gamma: VideoClip) -> tuple[float, np.ndarray]:
    """Loss sum(gamma^2) and its gradient wrt gamma; the default check loss."""
    loss = float(np.sum(gamma.data * gamma.data))
    return loss, 2.0 * gamma.data


def finite_diff_check(clip: VideoClip, params: MbpmParams, eps: float = 1e-3) -> dict:
    """Compare analytic gradients against central finite differences.

    Perturbs every spatial tap, every temporal tap and every input sample by
    +/-eps under the sum-of-squares loss.  Returns a report with the largest
    relative error per group and overall; relative error uses
    |a - n| / max(|a|, |n|, 1e-8).
    """
    work = params.copy()
    work.trainable = True
    gamma = mbpm_forward(clip, work)
    _, dgamma = sum_squares_loss(gamma)
    grads = mbpm_backward(dgamma, work)

    def loss_with(p: MbpmParams, x: VideoClip) -> float:
        return float(np.sum(mbpm_forward(x, p).data ** 2))

    def rel_err(a: float, n: float) -> float:
        return abs(a - n) / max(abs(a), abs(n), 1e-8)

    max_spatial = 0.0
    flat = work.spatial_weights
    for idx in np.ndindex(flat.shape):
        orig = flat[idx]
        flat[idx] = orig + eps
        lp = loss_with(work, clip)
        flat[idx] = orig - eps
        lm = loss_with(work, clip)
        flat[idx] = orig
        max_spatial = max(max_spatial, rel_err(grads.d_spatial[idx], (lp - lm) / (2 * eps)))

    max_temporal = 0.0
    taps = work.temporal_weights
    for idx in np.ndindex(taps.shape):
        orig = taps[idx]
        taps[idx] = orig + eps
        lp = loss_with(work, clip)
        taps[idx] = orig - eps
        lm = loss_with(work, clip)
        taps[idx] = orig
        max_temporal = max(max_temporal, rel_err(grads.d_temporal[idx], (lp - lm) / (2 * eps)))

    max_input = 0.0
    base = clip.data.copy()
    for idx in np.ndindex(base.shape):
        orig = base[idx]
        base[idx] = orig + eps
        lp = loss_with(work, VideoClip(base))
        base[idx] = orig - eps
        lm = loss_with(work, VideoClip(base))
        base[idx] = orig
        max_input = max(max_input, rel_err(grads.d_input[idx], (lp - lm) / (2 * eps)))

    return {
        "eps": eps,
        "max_rel_err_spatial": max_spatial,
        "max_rel_err_temporal": max_temporal,
        "max_rel_err_input": max_input,
        "max_rel_err": max(max_spatial, max_temporal, max_input),
    }


def count_params(params: MbpmParams) -> int:
    """Trainable tap count: c*k^2 spatial plus c*3 temporal."""
    return params.c * params.k * params.k + params.c * 3


def mac_breakdown(params: MbpmParams, input_shape: tuple[int, int, int, int]) -> tuple[int, int]:
    """(spatial, temporal) multiply-accumulate counts for one forward pass."""
    t, c, h, w = input_shape
    if c != params.c:
        raise DimensionError(f"params have {params.c} channels, shape has {c}")
    if params.stride == 3:
        if t % 3 != 0:
            raise DimensionError(f"temporal size {t} is not divisible by stride 3")
        t_out = t // 3
    else:
        t_out = t
    spatial = t * c * h * w * params.k * params.k
    temporal = t_out * c * h * w * 3
    return spatial, temporal


def count_macs(params: MbpmParams, input_shape: tuple[int, int, int, int]) -> int:
    """Total multiply-accumulates for one forward pass on the given input shape."""
    spatial, temporal = mac_breakdown(params, input_shape)
    return spatial + temporal
