import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perceptlab.clipcore import (
    VideoClip,
    as_frame,
    downsample_uniform,
    load_clip,
    preprocess,
    resize_bilinear,
    rotate_frame,
    sample_indices,
    save_clip,
    swap_rb,
)
from perceptlab.errors import FormatError, InputError


def random_clip(rng, t=5, h=6, w=7, fps=30.0):
    return VideoClip(rng.random((t, h, w, 3)).astype(np.float32), fps)


def test_clip_is_read_only():
    clip = random_clip(np.random.default_rng(0))
    with pytest.raises(ValueError):
        clip.frames[0, 0, 0, 0] = 1.0


def test_frame_validation():
    with pytest.raises(InputError):
        as_frame(np.zeros((4, 4)))
    with pytest.raises(InputError):
        as_frame(np.full((4, 4, 3), 1.5))
    with pytest.raises(InputError):
        VideoClip(np.zeros((0, 4, 4, 3)), 30.0)


@given(st.integers(1, 200), st.integers(1, 64))
def test_sample_indices_rule(total, n):
    idx = sample_indices(total, n)
    assert len(idx) == n
    assert all(idx[i] == (i * total) // n for i in range(n))
    assert np.all(np.diff(idx) >= 0) and idx[-1] < total


def test_downsample_examples():
    frames = np.stack([np.full((2, 2, 3), i / 40, np.float32) for i in range(32)])
    clip = VideoClip(frames, 30.0)
    out = downsample_uniform(clip, 16)
    assert len(out) == 16
    np.testing.assert_array_equal(out.frames[:, 0, 0, 0], frames[::2, 0, 0, 0])
    short = downsample_uniform(VideoClip(frames[:4], 30.0), 16)
    assert len(short) == 16
    assert np.array_equal(short.frames[3], frames[0])


def test_rotate_frame_clockwise():
    f = np.zeros((2, 3, 3), np.float32)
    f[0, 0] = 1.0  # top-left
    r = rotate_frame(f, 1)
    assert r.shape == (3, 2, 3)
    assert r[0, -1, 0] == 1.0  # top-left goes to top-right after a clockwise turn


@given(st.integers(0, 7))
@settings(max_examples=20)
def test_rotate_four_times_is_identity(k):
    f = np.random.default_rng(k).random((4, 5, 3)).astype(np.float32)
    g = f
    for _ in range(4):
        g = rotate_frame(g, k)
    assert np.array_equal(f, g)


def test_swap_rb():
    f = np.random.default_rng(1).random((3, 3, 3)).astype(np.float32)
    s = swap_rb(f)
    assert np.array_equal(s[..., 0], f[..., 2]) and np.array_equal(s[..., 1], f[..., 1])
    assert np.array_equal(swap_rb(s), f)


def resize_oracle(frame, oh, ow):
    h, w = frame.shape[:2]
    out = np.zeros((oh, ow, 3))
    for i in range(oh):
        for j in range(ow):
            sy = min(max((i + 0.5) * h / oh - 0.5, 0.0), h - 1)
            sx = min(max((j + 0.5) * w / ow - 0.5, 0.0), w - 1)
            y0, x0 = int(np.floor(sy)), int(np.floor(sx))
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            fy, fx = sy - y0, sx - x0
            out[i, j] = ((1 - fy) * (1 - fx) * frame[y0, x0] + (1 - fy) * fx * frame[y0, x1]
                         + fy * (1 - fx) * frame[y1, x0] + fy * fx * frame[y1, x1])
    return out


@given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 12), st.integers(1, 12), st.integers(0, 999))
@settings(max_examples=40)
def test_resize_matches_oracle(h, w, oh, ow, seed):
    f = np.random.default_rng(seed).random((h, w, 3)).astype(np.float32)
    np.testing.assert_allclose(resize_bilinear(f, oh, ow), resize_oracle(f.astype(np.float64), oh, ow), atol=1e-6)


def test_resize_constant_and_identity():
    f = np.full((7, 9, 3), 0.25, np.float32)
    np.testing.assert_allclose(resize_bilinear(f, 3, 4), 0.25, atol=1e-7)
    g = np.random.default_rng(2).random((5, 5, 3)).astype(np.float32)
    assert np.array_equal(resize_bilinear(g, 5, 5), g)


def test_preprocess_shape():
    clip = random_clip(np.random.default_rng(3), t=40, h=20, w=30)
    out = preprocess(clip, 16, 8, 8)
    assert out.frames.shape == (16, 8, 8, 3)


def test_clip_round_trip_bytes(tmp_path):
    rng = np.random.default_rng(4)
    clip = random_clip(rng, fps=12.5)
    save_clip(clip, tmp_path / "a")
    loaded = load_clip(tmp_path / "a")
    np.testing.assert_allclose(loaded.frames, clip.frames, atol=0.5 / 255 + 1e-6)
    assert loaded.fps == 12.5
    save_clip(loaded, tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_load_clip_errors(tmp_path):
    with pytest.raises(FormatError):
        load_clip(tmp_path / "missing")
    clip = random_clip(np.random.default_rng(5))
    save_clip(clip, tmp_path / "c")
    (tmp_path / "c" / "frame_00002.png").unlink()
    with pytest.raises(FormatError):
        load_clip(tmp_path / "c")
    save_clip(clip, tmp_path / "c")
    frame = tmp_path / "c" / "frame_00001.png"
    frame.write_bytes(b"JUNK" + frame.read_bytes()[4:])
    with pytest.raises(FormatError):
        load_clip(tmp_path / "c")


def test_save_removes_stale_frames(tmp_path):
    rng = np.random.default_rng(6)
    save_clip(random_clip(rng, t=6), tmp_path / "d")
    save_clip(random_clip(rng, t=3), tmp_path / "d")
    assert len(load_clip(tmp_path / "d")) == 3
