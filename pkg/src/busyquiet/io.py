"""Frame-sequence ingestion, raw clip persistence and visualization export.

Input frames arrive as PPM (P6, parsed natively) or PNG (via Pillow) image
sequences; there is deliberately no video-codec decoding here.  Clips persist
losslessly through a small raw format (magic ``BQC1``, little-endian header
and float32 payload).  Visualization maps signed feature clips onto 8-bit
images with min-max scaling; constant frames land on mid-gray.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .clip import VideoClip
from .errors import ConfigError, FormatError, IngestionError

RAW_MAGIC = b"BQC1"
_HEADER = struct.Struct("<4sIIII")  # magic, t, c, h, w; payload is little-endian float32


@dataclass(frozen=True)
class FrameSequenceSource:
    """Directory of same-sized frames, ordered by filename."""

    directory: Path
    fmt: str = "ppm"            # ppm | png
    pattern: str | None = None  # defaults to *.<fmt>
    channels: int = 3

    def __post_init__(self):
        if self.fmt not in ("ppm", "png"):
            raise ConfigError(f"format must be 'ppm' or 'png', got {self.fmt!r}")
        if self.channels not in (1, 3):
            raise ConfigError(f"expected channels must be 1 or 3, got {self.channels}")

    @property
    def glob_pattern(self) -> str:
        return self.pattern or f"*.{self.fmt}"


def _read_ppm(path: Path) -> tuple[np.ndarray, int]:
    """Parse binary PPM/PGM (P6/P5); returns (h, w, c) uint array and maxval."""
    raw = path.read_bytes()
    if raw[:2] not in (b"P6", b"P5"):
        raise IngestionError(f"{path}: not a binary PPM/PGM file")
    channels = 3 if raw[:2] == b"P6" else 1
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise IngestionError(f"{path}: truncated header")
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise IngestionError(f"{path}: bad header field: {exc}") from exc
    if not 0 < maxval < 65536:
        raise IngestionError(f"{path}: unsupported maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    count = w * h * channels
    payload = raw[pos : pos + count * dtype.itemsize]
    if len(payload) != count * dtype.itemsize:
        raise IngestionError(f"{path}: pixel payload is truncated")
    pixels = np.frombuffer(payload, dtype=dtype).reshape(h, w, channels)
    return pixels, maxval


def _read_png(path: Path, channels: int) -> tuple[np.ndarray, int]:
    with Image.open(path) as img:
        img = img.convert("RGB" if channels == 3 else "L")
        arr = np.asarray(img)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr, 255


def load_frames(source: FrameSequenceSource) -> VideoClip:
    """Assemble a clip from an image-sequence directory, scaled to [0, 1].

    Frames are taken in lexicographic filename order and must agree in size
    and channel count; at least 3 frames are required.  Sample values are
    quantized to the float32 grid so raw-format round trips are exact.
    """
    directory = Path(source.directory)
    if not directory.is_dir():
        raise IngestionError(f"{directory} is not a directory")
    paths = sorted(directory.glob(source.glob_pattern))
    if len(paths) < 3:
        raise IngestionError(
            f"need at least 3 frames matching {source.glob_pattern!r} in {directory}, found {len(paths)}"
        )
    frames = []
    shape = None
    for path in paths:
        if source.fmt == "ppm":
            pixels, maxval = _read_ppm(path)
        else:
            pixels, maxval = _read_png(path, source.channels)
        if pixels.shape[2] != source.channels:
            raise IngestionError(
                f"{path}: has {pixels.shape[2]} channels, expected {source.channels}"
            )
        if shape is None:
            shape = pixels.shape
        elif pixels.shape != shape:
            raise IngestionError(f"{path}: frame size {pixels.shape} != first frame {shape}")
        scaled = (pixels.astype(np.float64) / maxval).astype(np.float32)
        frames.append(scaled.transpose(2, 0, 1))
    return VideoClip(np.stack(frames).astype(np.float64), copy=False)


def save_raw(clip: VideoClip, path) -> Path:
    """Write a clip as BQC1: 20-byte header plus little-endian float32 payload."""
    path = Path(path)
    header = _HEADER.pack(RAW_MAGIC, clip.t, clip.c, clip.h, clip.w)
    payload = clip.data.astype("<f4").tobytes()
    path.write_bytes(header + payload)
    return path


def load_raw(path) -> VideoClip:
    """Read a BQC1 file back into a clip (float32 values, widened to float64)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: shorter than the {_HEADER.size}-byte header")
    magic, t, c, h, w = _HEADER.unpack_from(raw)
    if magic != RAW_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {RAW_MAGIC!r}")
    if min(t, c, h, w) < 1:
        raise FormatError(f"{path}: non-positive dimension in header ({t},{c},{h},{w})")
    expected = 4 * t * c * h * w
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(t, c, h, w)
    return VideoClip(data.astype(np.float64), copy=False)


def _to_bytes(frame: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi - lo < 1e-12:
        return np.full(frame.shape, 128, dtype=np.uint8)
    scaled = np.rint((frame - lo) / (hi - lo) * 255.0)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def export_visualization(clip: VideoClip, directory, mode: str = "per-frame-minmax") -> list[Path]:
    """Write one 8-bit PNG per frame (grayscale for 1 channel, RGB for 3).

    ``per-frame-minmax`` scales each frame by its own range; ``global-minmax``
    uses the range of the whole clip.  Constant frames map to mid-gray 128.
    """
    if mode not in ("per-frame-minmax", "global-minmax"):
        raise ConfigError(f"unknown visualization mode {mode!r}")
    if clip.c not in (1, 3):
        raise ConfigError(f"can only visualize 1- or 3-channel clips, got {clip.c}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    glo = float(clip.data.min())
    ghi = float(clip.data.max())
    written = []
    for ti in range(clip.t):
        frame = clip.data[ti]
        lo, hi = (glo, ghi) if mode == "global-minmax" else (float(frame.min()), float(frame.max()))
        pixels = _to_bytes(frame, lo, hi).transpose(1, 2, 0)
        img = Image.fromarray(pixels[:, :, 0] if clip.c == 1 else pixels, mode="L" if clip.c == 1 else "RGB")
        out = directory / f"frame_{ti:04d}.png"
        img.save(out)
        written.append(out)
    return written
