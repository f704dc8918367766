"""Construction of the two pathway inputs: busy (band-pass) and quiet (complement).

The busy stream is the stride-3 band-pass output at full resolution.  The
quiet stream is the 3-frame temporal average minus the busy stream, computed
at full resolution first and only then downsampled, matching the nesting
DownSamp(Avg(I) - busy).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clip import ResizePolicy, VideoClip, bilinear_resize, temporal_avg_pool
from .errors import ConfigError, DimensionError
from .mbpm import MbpmParams, mbpm_forward


@dataclass(frozen=True)
class DisentangleConfig:
    """Geometry and filter settings for splitting a clip into busy/quiet streams."""

    sigma: float = 1.1
    k: int = 9
    busy_size: tuple[int, int] = (256, 256)
    quiet_size: tuple[int, int] = (160, 160)
    segments: int = 8

    def __post_init__(self):
        if self.segments < 1:
            raise ConfigError(f"segments must be >= 1, got {self.segments}")
        bh, bw = self.busy_size
        qh, qw = self.quiet_size
        if qh > bh or qw > bw:
            raise ConfigError(f"quiet size {self.quiet_size} exceeds busy size {self.busy_size}")
        if min(bh, bw, qh, qw) < 1:
            raise ConfigError("sizes must be positive")


@dataclass(frozen=True)
class DisentangledPair:
    """The two complementary pathway inputs; both have t/3 frames."""

    busy: VideoClip
    quiet: VideoClip

    def __post_init__(self):
        if self.busy.t != self.quiet.t:
            raise DimensionError(f"busy has {self.busy.t} frames, quiet has {self.quiet.t}")


def busy_input(clip: VideoClip, params: MbpmParams) -> VideoClip:
    """Band-pass distillation: one output frame per three consecutive input frames."""
    if params.stride != 3:
        raise ConfigError("busy input requires stride-3 params")
    return mbpm_forward(clip, params)


def quiet_raw(clip: VideoClip, busy: VideoClip) -> VideoClip:
    """Temporal 3-frame average minus the busy stream, at the busy resolution."""
    averaged = temporal_avg_pool(clip)
    if averaged.shape != busy.shape:
        raise DimensionError(
            f"averaged clip {averaged.shape} and busy stream {busy.shape} do not conform"
        )
    return VideoClip(averaged.data - busy.data, copy=False)


def quiet_input(clip: VideoClip, busy: VideoClip, quiet_size: tuple[int, int]) -> VideoClip:
    """Complement of the busy stream, downsampled to the quiet resolution."""
    raw = quiet_raw(clip, busy)
    if (raw.h, raw.w) == tuple(quiet_size):
        return raw
    return bilinear_resize(raw, ResizePolicy(out_h=quiet_size[0], out_w=quiet_size[1]))


def disentangle(clip: VideoClip, config: DisentangleConfig, params: MbpmParams) -> DisentangledPair:
    """Split a clip into its busy and quiet pathway inputs (deterministic)."""
    if clip.t != 3 * config.segments:
        raise DimensionError(
            f"clip length {clip.t} does not equal 3 * segments = {3 * config.segments}"
        )
    if (clip.h, clip.w) != tuple(config.busy_size):
        raise DimensionError(
            f"clip spatial size {(clip.h, clip.w)} does not match busy size {config.busy_size}"
        )
    busy = busy_input(clip, params)
    quiet = quiet_input(clip, busy, config.quiet_size)
    return DisentangledPair(busy=busy, quiet=quiet)
