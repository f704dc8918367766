"""Synthetic clips for tests, demos and the toy training task.

The moving-square dataset is a two-class task (square translating left vs
right).  Squares start near the border on their motion side and partially
exit the frame during the clip, so the pooled band-pass response carries a
direction signal once the filter taps break symmetry.
"""

from __future__ import annotations

import numpy as np

from .clip import VideoClip
from .errors import ConfigError


def moving_square_clip(
    t: int,
    h: int,
    w: int,
    x0: int,
    y0: int,
    vx: int,
    side: int,
    level: float = 1.0,
    background: float = 0.0,
    channels: int = 1,
) -> VideoClip:
    """Square of brightness `level` translating horizontally by vx px/frame."""
    data = np.full((t, channels, h, w), background, dtype=np.float64)
    for ti in range(t):
        x = x0 + vx * ti
        xl, xr = max(0, x), min(w, x + side)
        yl, yr = max(0, y0), min(h, y0 + side)
        if xr > xl and yr > yl:
            data[ti, :, yl:yr, xl:xr] = level
    return VideoClip(data, copy=False)


def moving_square_dataset(
    count: int = 200,
    t: int = 6,
    size: int = 32,
    side: int = 10,
    speed: int = 3,
    seed: int = 0,
) -> list[tuple[VideoClip, int]]:
    """Balanced left(0)/right(1) moving-square clips, shape (t, 1, size, size)."""
    if count < 2 or t < 3 or size < side * 2:
        raise ConfigError(f"degenerate dataset spec count={count}, t={t}, size={size}, side={side}")
    rng = np.random.default_rng(seed)
    clips: list[tuple[VideoClip, int]] = []
    for i in range(count):
        label = i % 2  # 0 = moving left, 1 = moving right
        y0 = int(rng.integers(4, size - side - 4))
        if label == 1:
            x0 = int(rng.integers(size - side - 4, size - side + 2))
            vx = speed
        else:
            x0 = int(rng.integers(-2, 5))
            vx = -speed
        clips.append((moving_square_clip(t, size, size, x0, y0, vx, side), label))
    return clips


def moving_edge_clip(
    t: int = 9,
    c: int = 3,
    h: int = 48,
    w: int = 48,
    x0: int = 16,
    v: int = 1,
    lo: float = 0.2,
    hi: float = 0.8,
) -> tuple[VideoClip, list[int]]:
    """Vertical step edge sweeping right at v px/frame.

    Returns the clip and the per-frame edge column positions.  The trajectory
    stays away from the frame borders so the only moving structure is the edge.
    """
    if x0 + v * (t - 1) >= w - 1 or x0 < 1:
        raise ConfigError("edge trajectory must stay inside the frame")
    data = np.full((t, c, h, w), lo, dtype=np.float64)
    positions = []
    for ti in range(t):
        xe = x0 + v * ti
        data[ti, :, :, xe:] = hi
        positions.append(xe)
    return VideoClip(data, copy=False), positions
