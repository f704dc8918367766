"""Toy end-to-end training: band-pass module + linear head on labeled clips.

Demonstrates that the filter taps are trainable with plain fixed-step
gradient descent.  The head maps the globally average-pooled band-pass
output (one feature per channel) to class scores; cross-entropy loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clip import VideoClip
from .errors import ConfigError, DimensionError, NumericError, ValidationError
from .mbpm import MbpmParams, mbpm_backward, mbpm_forward


@dataclass
class LinearHead:
    """Per-class affine map over pooled band-pass features."""

    weights: np.ndarray  # (classes, channels)
    bias: np.ndarray     # (classes,)

    @property
    def classes(self) -> int:
        return self.weights.shape[0]


def init_head(classes: int, channels: int, seed: int = 0, scale: float = 0.5) -> LinearHead:
    """Small random weights (symmetry breaking), zero bias."""
    rng = np.random.default_rng(seed)
    return LinearHead(
        weights=rng.normal(0.0, scale, size=(classes, channels)),
        bias=np.zeros(classes, dtype=np.float64),
    )


def _validate_dataset(dataset, classes: int) -> tuple[np.ndarray, np.ndarray]:
    if not dataset:
        raise ConfigError("dataset is empty")
    shape = dataset[0][0].shape
    clips = np.empty((len(dataset),) + shape, dtype=np.float64)
    labels = np.empty(len(dataset), dtype=np.intp)
    for n, (clip, label) in enumerate(dataset):
        if clip.shape != shape:
            raise DimensionError(f"clip {n} has shape {clip.shape}, expected {shape}")
        if not 0 <= int(label) < classes:
            raise ConfigError(f"label {label} outside [0, {classes})")
        clips[n] = clip.data
        labels[n] = int(label)
    return clips, labels


def _cross_entropy(scores: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    z = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_probs = z - log_norm
    n = scores.shape[0]
    loss = -float(log_probs[np.arange(n), labels].mean())
    d_scores = np.exp(log_probs)
    d_scores[np.arange(n), labels] -= 1.0
    return loss, d_scores / n


def train_toy(
    dataset: list[tuple[VideoClip, int]],
    params: MbpmParams,
    head: LinearHead,
    steps: int,
    lr: float,
) -> dict:
    """Full-batch gradient descent on cross-entropy through head and filter taps.

    With params.trainable=False only the head is updated.  Requires uniform
    clip shapes and stride-3 params (the toy task distills each clip to
    t/3 frames).  Returns the loss curve (steps+1 entries: initial loss,
    then after each update), its running-minimum smoothing, and the final
    training accuracy.
    """
    if steps < 0:
        raise ConfigError(f"steps must be >= 0, got {steps}")
    if lr < 0:
        raise ConfigError(f"lr must be >= 0, got {lr}")
    if params.stride != 3:
        raise ConfigError("the toy trainer expects stride-3 params")
    clips, labels = _validate_dataset(dataset, head.classes)
    n, t, c, h, w = clips.shape
    if c != params.c:
        raise DimensionError(f"params have {params.c} channels, clips have {c}")
    if t % 3 != 0:
        raise DimensionError(f"clip length {t} is not divisible by 3")
    t_out = t // 3
    pool = t_out * h * w
    # clips are stacked along time; the stride-3 windows tile each clip
    # exactly, so no window straddles two clips
    batch = VideoClip(clips.reshape(n * t, c, h, w), copy=False)

    def evaluate() -> tuple[float, np.ndarray, np.ndarray, VideoClip]:
        gamma = mbpm_forward(batch, params)
        feats = gamma.data.reshape(n, t_out, c, h, w).mean(axis=(1, 3, 4))
        scores = feats @ head.weights.T + head.bias
        loss, d_scores = _cross_entropy(scores, labels)
        return loss, feats, d_scores, scores

    loss_curve: list[float] = []
    loss, feats, d_scores, scores = evaluate()
    loss_curve.append(loss)
    for step in range(steps):
        if not np.isfinite(loss):
            raise NumericError(f"loss diverged (non-finite) at step {step}")
        if params.trainable and lr != 0.0:
            d_feats = d_scores @ head.weights  # (n, c)
            d_gamma = np.broadcast_to(
                d_feats[:, None, :, None, None] / pool, (n, t_out, c, h, w)
            ).reshape(n * t_out, c, h, w)
            grads = mbpm_backward(d_gamma, params)
            params.spatial_weights -= lr * grads.d_spatial
            params.temporal_weights -= lr * grads.d_temporal
        head.weights = head.weights - lr * (d_scores.T @ feats)
        head.bias = head.bias - lr * d_scores.sum(axis=0)
        try:
            loss, feats, d_scores, scores = evaluate()
        except (ValidationError, FloatingPointError) as exc:
            raise NumericError(f"loss diverged (non-finite values) at step {step + 1}") from exc
        loss_curve.append(loss)
    if not np.isfinite(loss):
        raise NumericError(f"loss diverged (non-finite) at step {steps}")

    accuracy = float((scores.argmax(axis=1) == labels).mean())
    smoothed = np.minimum.accumulate(loss_curve).tolist()
    return {
        "steps": steps,
        "lr": lr,
        "trainable": params.trainable,
        "loss_curve": loss_curve,
        "loss_curve_smoothed": smoothed,
        "accuracy": accuracy,
    }
