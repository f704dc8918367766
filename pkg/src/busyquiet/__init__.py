"""Busy/quiet video disentangling with a trainable separable motion band-pass module."""

from .clip import (
    VideoClip,
    ResizePolicy,
    new_clip,
    bilinear_resize,
    temporal_avg_pool,
    channelwise_conv2d,
    channelwise_conv1d_temporal,
)
from .kernels import SpatialKernel, TemporalKernel, log_kernel, temporal_highpass_kernel, export_kernel
from .mbpm import (
    MbpmParams,
    MbpmGradients,
    init_mbpm,
    mbpm_forward,
    mbpm_backward,
    bandpass_direct,
    finite_diff_check,
    count_params,
    count_macs,
)
from .disentangle import DisentangleConfig, DisentangledPair, busy_input, quiet_input, quiet_raw, disentangle
from .bqn import BqnConfig, LateralSpec, build_bqn, forward, fuse_scores, bplc, lc_variant
from .train import LinearHead, init_head, train_toy
from .io import FrameSequenceSource, load_frames, save_raw, load_raw, export_visualization
from .bench import run_bench
from .errors import (
    BusyQuietError,
    ConfigError,
    DimensionError,
    FormatError,
    IngestionError,
    NormalizationError,
    NumericError,
    StateError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "VideoClip",
    "ResizePolicy",
    "new_clip",
    "bilinear_resize",
    "temporal_avg_pool",
    "channelwise_conv2d",
    "channelwise_conv1d_temporal",
    "SpatialKernel",
    "TemporalKernel",
    "log_kernel",
    "temporal_highpass_kernel",
    "export_kernel",
    "MbpmParams",
    "MbpmGradients",
    "init_mbpm",
    "mbpm_forward",
    "mbpm_backward",
    "bandpass_direct",
    "finite_diff_check",
    "count_params",
    "count_macs",
    "DisentangleConfig",
    "DisentangledPair",
    "busy_input",
    "quiet_input",
    "quiet_raw",
    "disentangle",
    "BqnConfig",
    "LateralSpec",
    "build_bqn",
    "forward",
    "fuse_scores",
    "bplc",
    "lc_variant",
    "LinearHead",
    "init_head",
    "train_toy",
    "FrameSequenceSource",
    "load_frames",
    "save_raw",
    "load_raw",
    "export_visualization",
    "run_bench",
    "BusyQuietError",
    "ConfigError",
    "DimensionError",
    "FormatError",
    "IngestionError",
    "NormalizationError",
    "NumericError",
    "StateError",
    "ValidationError",
]
