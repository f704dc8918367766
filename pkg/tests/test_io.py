import numpy as np
import pytest
from PIL import Image

from busyquiet.clip import VideoClip
from busyquiet.errors import ConfigError, FormatError, IngestionError
from busyquiet.io import (
    FrameSequenceSource,
    export_visualization,
    load_frames,
    load_raw,
    save_raw,
)
from busyquiet.mbpm import init_mbpm, mbpm_forward
from busyquiet.synthetic import moving_square_clip


def write_ppm(path, pixels: np.ndarray, maxval: int = 255, comment: bool = False):
    h, w, _ = pixels.shape
    header = f"P6\n{'# test comment' if comment else ''}\n{w} {h}\n{maxval}\n".replace("\n\n", "\n")
    if comment:
        header = f"P6\n# test comment\n{w} {h}\n{maxval}\n"
    if maxval > 255:
        payload = pixels.astype(">u2").tobytes()
    else:
        payload = pixels.astype(np.uint8).tobytes()
    path.write_bytes(header.encode("ascii") + payload)


def make_sequence(directory, count=3, h=6, w=5, fmt="ppm", value=None):
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    for i in range(count):
        pixels = rng.integers(0, 256, size=(h, w, 3)) if value is None else np.full((h, w, 3), value)
        if fmt == "ppm":
            write_ppm(directory / f"frame_{i:03d}.ppm", pixels)
        else:
            Image.fromarray(pixels.astype(np.uint8), "RGB").save(directory / f"frame_{i:03d}.png")


class TestLoadFrames:
    @pytest.mark.parametrize("fmt", ["ppm", "png"])
    def test_shape_and_order(self, tmp_path, fmt):
        make_sequence(tmp_path / "seq", count=6, h=8, w=4, fmt=fmt)
        clip = load_frames(FrameSequenceSource(directory=tmp_path / "seq", fmt=fmt))
        assert clip.shape == (6, 3, 8, 4)

    def test_scaling_255_to_one(self, tmp_path):
        make_sequence(tmp_path / "seq", count=3, value=255)
        clip = load_frames(FrameSequenceSource(directory=tmp_path / "seq"))
        assert clip.data.max() == 1.0
        assert clip.data.min() == 1.0

    def test_sixteen_bit_maxval(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        for i in range(3):
            write_ppm(d / f"f{i}.ppm", np.full((2, 2, 3), 65535), maxval=65535)
        clip = load_frames(FrameSequenceSource(directory=d))
        assert clip.data.max() == 1.0

    def test_comment_header(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        for i in range(3):
            write_ppm(d / f"f{i}.ppm", np.full((2, 2, 3), 128), comment=True)
        clip = load_frames(FrameSequenceSource(directory=d))
        assert clip.shape == (3, 3, 2, 2)

    def test_too_few_frames(self, tmp_path):
        make_sequence(tmp_path / "seq", count=2)
        with pytest.raises(IngestionError):
            load_frames(FrameSequenceSource(directory=tmp_path / "seq"))

    def test_empty_directory(self, tmp_path):
        (tmp_path / "seq").mkdir()
        with pytest.raises(IngestionError):
            load_frames(FrameSequenceSource(directory=tmp_path / "seq"))

    def test_mixed_dimensions(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        write_ppm(d / "a.ppm", np.zeros((4, 4, 3)))
        write_ppm(d / "b.ppm", np.zeros((4, 4, 3)))
        write_ppm(d / "c.ppm", np.zeros((5, 4, 3)))
        with pytest.raises(IngestionError):
            load_frames(FrameSequenceSource(directory=d))

    def test_truncated_payload(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        for i in range(2):
            write_ppm(d / f"f{i}.ppm", np.zeros((4, 4, 3)))
        (d / "f2.ppm").write_bytes(b"P6\n4 4\n255\n\x00\x00")
        with pytest.raises(IngestionError):
            load_frames(FrameSequenceSource(directory=d))

    def test_not_a_ppm(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        for i in range(3):
            (d / f"f{i}.ppm").write_bytes(b"JUNKJUNK")
        with pytest.raises(IngestionError):
            load_frames(FrameSequenceSource(directory=d))

    def test_grayscale_png(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        for i in range(3):
            Image.fromarray(np.full((4, 4), 100, dtype=np.uint8), "L").save(d / f"f{i}.png")
        clip = load_frames(FrameSequenceSource(directory=d, fmt="png", channels=1))
        assert clip.shape == (3, 1, 4, 4)

    def test_bad_source_config(self):
        with pytest.raises(ConfigError):
            FrameSequenceSource(directory="x", fmt="jpeg")
        with pytest.raises(ConfigError):
            FrameSequenceSource(directory="x", channels=4)


class TestRawRoundTrip:
    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(7)
        data = rng.uniform(0, 1, size=(4, 3, 6, 5)).astype(np.float32).astype(np.float64)
        clip = VideoClip(data)
        save_raw(clip, tmp_path / "clip.bqc1")
        loaded = load_raw(tmp_path / "clip.bqc1")
        np.testing.assert_array_equal(loaded.data, clip.data)

    def test_file_level_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        clip = VideoClip(rng.uniform(size=(3, 1, 4, 4)))
        p1 = tmp_path / "a.bqc1"
        p2 = tmp_path / "b.bqc1"
        save_raw(clip, p1)
        save_raw(load_raw(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncated_file(self, tmp_path):
        clip = VideoClip(np.zeros((3, 1, 4, 4)))
        path = save_raw(clip, tmp_path / "clip.bqc1")
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(FormatError):
            load_raw(path)

    def test_bad_magic(self, tmp_path):
        path = save_raw(VideoClip(np.zeros((3, 1, 2, 2))), tmp_path / "c.bqc1")
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            load_raw(path)

    def test_header_payload_mismatch(self, tmp_path):
        path = save_raw(VideoClip(np.zeros((3, 1, 2, 2))), tmp_path / "c.bqc1")
        path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
        with pytest.raises(FormatError):
            load_raw(path)

    def test_header_shorter_than_minimum(self, tmp_path):
        (tmp_path / "c.bqc1").write_bytes(b"BQC1\x01")
        with pytest.raises(FormatError):
            load_raw(tmp_path / "c.bqc1")


class TestVisualization:
    def test_zero_clip_maps_to_midgray(self, tmp_path):
        clip = VideoClip(np.zeros((2, 1, 4, 4)))
        paths = export_visualization(clip, tmp_path / "viz")
        assert len(paths) == 2
        pixels = np.asarray(Image.open(paths[0]))
        assert (pixels == 128).all()

    def test_busy_stream_is_bright_at_square_boundary(self, tmp_path):
        clip = moving_square_clip(t=9, h=32, w=32, x0=6, y0=12, vx=2, side=8)
        busy = mbpm_forward(clip, init_mbpm(1.1, 9, 1, 3))
        paths = export_visualization(busy, tmp_path / "viz", mode="per-frame-minmax")
        pixels = np.asarray(Image.open(paths[1])).astype(float)
        # the moving vertical edges produce the extremes; static rows far from
        # the square stay near mid-gray
        band = pixels[:, 4:28]
        assert band.max() > 200
        calm = pixels[:2, :]
        assert np.abs(calm - 128).max() < 32

    def test_modes_differ_when_frame_energy_varies(self, tmp_path):
        data = np.zeros((2, 1, 4, 4))
        data[0, 0, 0, 0] = 1.0
        data[1, 0, 0, 0] = 10.0
        clip = VideoClip(data)
        per = export_visualization(clip, tmp_path / "per", mode="per-frame-minmax")
        glo = export_visualization(clip, tmp_path / "glo", mode="global-minmax")
        a = np.asarray(Image.open(per[0]))
        b = np.asarray(Image.open(glo[0]))
        assert (a != b).any()

    def test_rgb_output(self, tmp_path):
        rng = np.random.default_rng(3)
        clip = VideoClip(rng.uniform(size=(2, 3, 4, 4)))
        paths = export_visualization(clip, tmp_path / "viz")
        assert np.asarray(Image.open(paths[0])).shape == (4, 4, 3)

    def test_bad_mode(self, tmp_path):
        with pytest.raises(ConfigError):
            export_visualization(VideoClip(np.zeros((1, 1, 2, 2))), tmp_path, mode="log")

    def test_unsupported_channels(self, tmp_path):
        with pytest.raises(ConfigError):
            export_visualization(VideoClip(np.zeros((1, 2, 2, 2))), tmp_path)
