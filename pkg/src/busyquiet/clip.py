"""Dense video-clip substrate: construction, resizing, pooling and channel-wise convolution.

A clip is a rank-4 tensor (time, channel, height, width) of float64 samples.
Raw input frames live in [0, 1]; intermediate feature maps are unbounded.
All operations are pure: they validate their inputs, allocate a fresh output
and never mutate their arguments.  Convolutions accumulate in float64 with a
fixed per-output-element summation order, so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, ValidationError

DTYPE = np.float64


class VideoClip:
    """Immutable (t, c, h, w) tensor of float64 samples.

    Construct from an existing 4-d array, or via :func:`new_clip` from a flat
    sequence.  The wrapped array is marked read-only.  Pass ``copy=False``
    only for freshly allocated arrays that are not referenced elsewhere.
    """

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray, *, copy: bool = True):
        arr = np.asarray(data, dtype=DTYPE)
        if arr.ndim != 4:
            raise DimensionError(f"clip data must be rank-4 (t, c, h, w), got rank {arr.ndim}")
        if min(arr.shape) < 1:
            raise DimensionError(f"clip dimensions must all be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("clip contains non-finite values")
        if copy and (arr is data or not arr.flags.owndata):
            arr = arr.copy()
        arr.setflags(write=False)
        self.data = arr

    @property
    def t(self) -> int:
        return self.data.shape[0]

    @property
    def c(self) -> int:
        return self.data.shape[1]

    @property
    def h(self) -> int:
        return self.data.shape[2]

    @property
    def w(self) -> int:
        return self.data.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"VideoClip(t={self.t}, c={self.c}, h={self.h}, w={self.w})"


@dataclass(frozen=True)
class ResizePolicy:
    """Spatial resize target; only bilinear interpolation with half-pixel centers."""

    out_h: int
    out_w: int
    mode: str = "bilinear"

    def __post_init__(self):
        if self.mode != "bilinear":
            raise ConfigError(f"unsupported resize mode {self.mode!r}")
        if self.out_h < 1 or self.out_w < 1:
            raise ConfigError(f"resize target must be >= 1, got {self.out_h}x{self.out_w}")


def new_clip(t: int, c: int, h: int, w: int, data) -> VideoClip:
    """Build a clip from a flat row-major sequence of t*c*h*w reals."""
    arr = np.asarray(data, dtype=DTYPE).ravel()
    expected = t * c * h * w
    if arr.size != expected:
        raise DimensionError(
            f"data length {arr.size} does not match t*c*h*w = {expected} for shape ({t},{c},{h},{w})"
        )
    if t < 1 or c < 1 or h < 1 or w < 1:
        raise DimensionError(f"clip dimensions must all be >= 1, got ({t},{c},{h},{w})")
    return VideoClip(arr.reshape(t, c, h, w))


def _axis_coords(n_in: int, n_out: int):
    # half-pixel centers: source position of output sample i is (i+0.5)*n_in/n_out - 0.5
    pos = (np.arange(n_out, dtype=DTYPE) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1.0)
    i0 = np.floor(pos).astype(np.intp)
    i0 = np.minimum(i0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w1 = pos - i0
    return i0, i1, w1


def bilinear_resize(clip: VideoClip, policy: ResizePolicy) -> VideoClip:
    """Resize every frame/channel plane to (policy.out_h, policy.out_w).

    Each output sample blends the four nearest input samples under the
    half-pixel-center convention (source coordinates are clamped at the
    borders, so edge samples are replicated rather than extrapolated).
    """
    y0, y1, wy = _axis_coords(clip.h, policy.out_h)
    x0, x1, wx = _axis_coords(clip.w, policy.out_w)
    d = clip.data
    rows = d[:, :, y0, :] * (1.0 - wy)[None, None, :, None] + d[:, :, y1, :] * wy[None, None, :, None]
    out = rows[:, :, :, x0] * (1.0 - wx) + rows[:, :, :, x1] * wx
    return VideoClip(out, copy=False)


def temporal_avg_pool(clip: VideoClip, window: int = 3, stride: int = 3) -> VideoClip:
    """Average non-overlapping 3-frame windows; output has t/3 frames."""
    if (window, stride) != (3, 3):
        raise ConfigError(f"only window=3, stride=3 pooling is supported, got ({window},{stride})")
    if clip.t % 3 != 0:
        raise DimensionError(f"clip length {clip.t} is not divisible by 3")
    d = clip.data
    out = d.reshape(clip.t // 3, 3, clip.c, clip.h, clip.w).mean(axis=1)
    return VideoClip(out, copy=False)


def channelwise_conv2d(clip: VideoClip, bank) -> VideoClip:
    """Convolve every frame with its channel's k x k kernel (cross-correlation).

    Zero padding of (k-1)/2 keeps the spatial size; each channel uses its own
    kernel from the bank.  The sum over the k*k window is evaluated in a fixed
    row-major tap order.
    """
    weights = np.asarray(bank.weights, dtype=DTYPE)
    if weights.ndim != 3 or weights.shape[1] != weights.shape[2]:
        raise ConfigError(f"spatial bank must be (c, k, k), got {weights.shape}")
    k = weights.shape[1]
    if k % 2 == 0:
        raise ConfigError(f"spatial kernel side must be odd, got {k}")
    if weights.shape[0] != clip.c:
        raise DimensionError(f"bank has {weights.shape[0]} channels, clip has {clip.c}")
    p = (k - 1) // 2
    padded = np.pad(clip.data, ((0, 0), (0, 0), (p, p), (p, p)))
    windows = np.lib.stride_tricks.sliding_window_view(padded, (k, k), axis=(2, 3))
    out = np.einsum("tchwij,cij->tchw", windows, weights)
    return VideoClip(out, copy=False)


def channelwise_conv1d_temporal(clip: VideoClip, bank, stride: int, boundary: str) -> VideoClip:
    """Convolve along time with each channel's 3-tap kernel.

    Supported combinations:

    * ``stride=3, boundary="valid-aligned"`` - the 3-frame windows tile the
      sequence exactly (clip.t must be divisible by 3); output has t/3 frames.
    * ``stride=1, boundary="replicate"`` - first/last frames are replicated
      past the ends; output keeps the input length.
    """
    taps = np.asarray(bank.weights, dtype=DTYPE)
    if taps.ndim != 2 or taps.shape[1] != 3:
        raise ConfigError(f"temporal bank must be (c, 3), got {taps.shape}")
    if taps.shape[0] != clip.c:
        raise DimensionError(f"bank has {taps.shape[0]} channels, clip has {clip.c}")
    d = clip.data
    if stride == 3 and boundary == "valid-aligned":
        if clip.t % 3 != 0:
            raise DimensionError(f"clip length {clip.t} is not divisible by stride 3")
        grouped = d.reshape(clip.t // 3, 3, clip.c, clip.h, clip.w)
        out = np.einsum("xjchw,cj->xchw", grouped, taps)
        return VideoClip(out, copy=False)
    if stride == 1 and boundary == "replicate":
        prev = np.concatenate([d[:1], d[:-1]], axis=0)
        nxt = np.concatenate([d[1:], d[-1:]], axis=0)
        w = taps[None, :, :, None, None]
        out = prev * w[:, :, 0] + d * w[:, :, 1] + nxt * w[:, :, 2]
        return VideoClip(out, copy=False)
    raise ConfigError(f"unsupported (stride, boundary) combination ({stride}, {boundary!r})")
