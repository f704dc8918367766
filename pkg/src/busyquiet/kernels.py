"""Filter-bank construction for the motion band-pass module.

The spatial bank samples a Laplacian-of-Gaussian on the integer grid and
(optionally) normalizes it; the temporal bank is the fixed 3-tap high-pass
[-1/3, 2/3, -1/3].  Kernels are immutable once built; trainable copies of
their weights are owned by the module parameters, not by these banks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NormalizationError

NORM_MODES = ("sum1", "l1", "none")

HIGH_PASS_TAPS = (-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0)


@dataclass(frozen=True)
class SpatialKernel:
    """Per-channel k x k filter bank with its construction metadata."""

    weights: np.ndarray  # (c, k, k) float64, read-only
    sigma: float
    norm_mode: str

    @property
    def c(self) -> int:
        return self.weights.shape[0]

    @property
    def k(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TemporalKernel:
    """Per-channel 3-tap filter bank with its temporal stride."""

    weights: np.ndarray  # (c, 3) float64, read-only
    stride: int

    @property
    def c(self) -> int:
        return self.weights.shape[0]


def log_values(sigma: float, k: int) -> np.ndarray:
    """Sample the Laplacian of Gaussian with scale sigma on the k x k integer grid.

    Grid offsets run over [-(k-1)/2, (k-1)/2] in both axes; the value at
    radius r is -exp(-r^2 / (2 sigma^2)) / (pi sigma^4) * (1 - r^2 / (2 sigma^2)).
    No normalization is applied here.
    """
    r = (k - 1) // 2
    offs = np.arange(k, dtype=np.float64) - r
    r2 = offs[:, None] ** 2 + offs[None, :] ** 2
    two_s2 = 2.0 * sigma * sigma
    return -np.exp(-r2 / two_s2) / (math.pi * sigma**4) * (1.0 - r2 / two_s2)


def log_kernel(sigma: float, k: int, c: int = 3, norm_mode: str = "sum1") -> SpatialKernel:
    """Build the per-channel LoG bank, normalized according to norm_mode.

    norm_mode:
      * ``sum1`` - divide by the raw sum of the sampled values (the discrete
        sum of a truncated LoG can be tiny, which makes this mode amplify the
        kernel strongly; a divisor below 1e-8 in magnitude is rejected).
      * ``l1``   - divide by the sum of absolute values.
      * ``none`` - keep the raw samples.
    """
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    if k % 2 == 0 or k < 3:
        raise ConfigError(f"kernel side must be odd and >= 3, got {k}")
    if c < 1:
        raise ConfigError(f"channel count must be >= 1, got {c}")
    if norm_mode not in NORM_MODES:
        raise ConfigError(f"norm_mode must be one of {NORM_MODES}, got {norm_mode!r}")
    grid = log_values(sigma, k)
    if norm_mode == "sum1":
        divisor = grid.sum()
        if abs(divisor) < 1e-8:
            raise NormalizationError(
                f"raw kernel sum {divisor:.3e} is too close to zero for sum1 normalization "
                f"(sigma={sigma}, k={k}); use norm_mode='l1' or 'none'"
            )
        grid = grid / divisor
    elif norm_mode == "l1":
        grid = grid / np.abs(grid).sum()
    weights = np.repeat(grid[None, :, :], c, axis=0)
    weights.setflags(write=False)
    return SpatialKernel(weights=weights, sigma=float(sigma), norm_mode=norm_mode)


def temporal_highpass_kernel(c: int, s: int) -> TemporalKernel:
    """Build the per-channel [-1/3, 2/3, -1/3] bank for stride s (1 or 3)."""
    if s not in (1, 3):
        raise ConfigError(f"temporal stride must be 1 or 3, got {s}")
    if c < 1:
        raise ConfigError(f"channel count must be >= 1, got {c}")
    weights = np.tile(np.array(HIGH_PASS_TAPS, dtype=np.float64), (c, 1))
    weights.setflags(write=False)
    return TemporalKernel(weights=weights, stride=s)


def _heatmap_bytes(plane: np.ndarray) -> np.ndarray:
    lo = plane.min()
    hi = plane.max()
    if hi - lo < 1e-300:
        return np.full(plane.shape, 128, dtype=np.uint8)
    scaled = np.rint((plane - lo) / (hi - lo) * 255.0)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def export_kernel(kernel, path, fmt: str = "json") -> Path:
    """Write a kernel bank to disk.

    ``json`` stores the exact float64 weights (round-trippable bit for bit).
    ``pgm-heatmap`` writes a P5 grayscale image, one k x k (or 1 x 3) block
    per channel stacked vertically, each block min-max scaled to 0..255;
    constant blocks map to mid-gray 128.
    """
    path = Path(path)
    if fmt == "json":
        if isinstance(kernel, SpatialKernel):
            doc = {
                "sigma": kernel.sigma,
                "k": kernel.k,
                "channels": kernel.c,
                "norm_mode": kernel.norm_mode,
                "weights": kernel.weights.tolist(),
            }
        elif isinstance(kernel, TemporalKernel):
            doc = {
                "channels": kernel.c,
                "stride": kernel.stride,
                "weights": kernel.weights.tolist(),
            }
        else:
            raise ConfigError(f"cannot export object of type {type(kernel).__name__}")
        path.write_text(json.dumps(doc, indent=2) + "\n")
        return path
    if fmt == "pgm-heatmap":
        if isinstance(kernel, SpatialKernel):
            blocks = [kernel.weights[ch] for ch in range(kernel.c)]
        elif isinstance(kernel, TemporalKernel):
            blocks = [kernel.weights[ch : ch + 1] for ch in range(kernel.c)]
        else:
            raise ConfigError(f"cannot export object of type {type(kernel).__name__}")
        image = np.vstack([_heatmap_bytes(b) for b in blocks])
        header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
        path.write_bytes(header + image.tobytes())
        return path
    raise ConfigError(f"unsupported export format {fmt!r}")
