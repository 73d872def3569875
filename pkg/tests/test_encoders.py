import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import central_difference, hog_brute, propagate_shape, rel_err

from perceptlab.clipcore import VideoClip
from perceptlab.encoders import (
    C3DEncoder,
    Conv,
    EncoderConfig,
    FrameConvStack,
    Pool,
    TrainHyper,
    baseline1,
    baseline2,
    c3d_config,
    classify,
    desk_config,
    encode,
    frame_avg_encode,
    hog_descriptor,
    hog_length,
    init_weights,
    load_weights,
    pretrain,
    save_weights,
    softmax_cross_entropy,
)
from perceptlab.encoders.train import batch_loss_and_grads
from perceptlab.encoders.weightio import dumps, loads
from perceptlab.errors import ConfigurationError, FormatError, InputError, TrainingError


def tiny_config(num_classes=2):
    return EncoderConfig(4, 8, 8, (Conv(2), Pool((2, 2, 2)), Conv(3), Pool((2, 2, 2))), num_classes)


def random_clip(rng, t, h, w):
    return VideoClip(rng.random((t, h, w, 3)).astype(np.float32), 30.0)


# --- configuration and shapes ----------------------------------------------------

def test_full_config_gives_8192_features():
    cfg = c3d_config()
    assert cfg.feature_dim == 8192
    assert propagate_shape(cfg) == cfg.output_shape() == (512, 1, 4, 4)
    assert sum(isinstance(layer, Conv) for layer in cfg.layers) == 8
    assert sum(isinstance(layer, Pool) for layer in cfg.layers) == 5


def test_desk_config_matches_shape_oracle():
    cfg = desk_config()
    assert cfg.output_shape() == propagate_shape(cfg)
    clip = random_clip(np.random.default_rng(0), 16, 56, 56)
    assert encode(clip, cfg, init_weights(cfg, 0)).shape == (cfg.feature_dim,)


def test_config_rejects_bad_kernels():
    with pytest.raises(ConfigurationError):
        EncoderConfig(4, 8, 8, (Conv(2, kernel=(1, 3, 3)),))
    with pytest.raises(ConfigurationError):
        EncoderConfig(4, 8, 8, ())


def test_encode_rejects_unprocessed_clip():
    cfg = tiny_config()
    with pytest.raises(InputError):
        encode(random_clip(np.random.default_rng(1), 5, 8, 8), cfg, init_weights(cfg))


def test_zero_weights_give_zero_feature_and_uniform_probs():
    cfg = tiny_config(num_classes=4)
    w = init_weights(cfg)
    for k in w:
        w[k][...] = 0
    clip = random_clip(np.random.default_rng(2), 4, 8, 8)
    assert np.all(encode(clip, cfg, w) == 0)
    np.testing.assert_allclose(classify(clip, cfg, w), 0.25, atol=1e-7)


def test_encode_is_deterministic():
    cfg = tiny_config()
    w = init_weights(cfg, 3)
    clip = random_clip(np.random.default_rng(3), 4, 8, 8)
    assert np.array_equal(encode(clip, cfg, w), encode(clip, cfg, w))


def test_classify_matches_logit_oracle():
    cfg = tiny_config(num_classes=3)
    w = init_weights(cfg, 4)
    w["head.bias"][:] = [0.1, -0.2, 0.3]
    rng = np.random.default_rng(4)
    for _ in range(5):
        clip = random_clip(rng, 4, 8, 8)
        feat = encode(clip, cfg, w).astype(np.float64)
        logits = [sum(float(w["head.weight"][c, j]) * feat[j] for j in range(feat.size)) + float(w["head.bias"][c])
                  for c in range(3)]
        p = classify(clip, cfg, w)
        assert abs(p.sum() - 1) < 1e-6 and np.all(p >= 0)
        assert int(np.argmax(p)) == int(np.argmax(logits))
        e = np.exp(np.array(logits) - max(logits))
        np.testing.assert_allclose(p, e / e.sum(), rtol=1e-5)


def test_encoder_wrapper_preprocesses():
    cfg = tiny_config()
    enc = C3DEncoder(cfg, init_weights(cfg, 5))
    clip = random_clip(np.random.default_rng(5), 10, 16, 16)
    assert enc(clip).shape == (enc.dim,)


# --- loss and gradients ---------------------------------------------------------------

def test_softmax_cross_entropy_examples():
    loss, grad = softmax_cross_entropy(np.zeros(5), 2)
    assert loss == pytest.approx(np.log(5))
    assert grad.sum() == pytest.approx(0.0, abs=1e-12)
    loss, _ = softmax_cross_entropy(np.array([0.0, 800.0, 0.0]), 1)
    assert loss == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InputError):
        softmax_cross_entropy(np.zeros(3), 3)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=6), st.data())
@settings(max_examples=30)
def test_softmax_cross_entropy_grad_fd(values, data):
    logits = np.array(values)
    label = data.draw(st.integers(0, len(values) - 1))
    _, grad = softmax_cross_entropy(logits, label)
    fd = central_difference(lambda: softmax_cross_entropy(logits, label)[0], logits)
    np.testing.assert_allclose(grad, fd, atol=1e-4)


def test_all_pretrain_gradients_match_finite_differences():
    cfg = tiny_config()
    rng = np.random.default_rng(6)
    w = init_weights(cfg, 6).astype(np.float64)
    for k in w:
        if k.endswith("bias"):
            w[k] = rng.normal(size=w[k].shape) * 0.1
    x = rng.random((3, 3, 4, 8, 8))
    y = np.array([0, 1, 1])
    _, grads = batch_loss_and_grads(x, y, cfg, w)
    for name in w:
        fd = central_difference(lambda: batch_loss_and_grads(x, y, cfg, w)[0], w[name])
        assert rel_err(grads[name], fd) <= 1e-4, name


def separable_dataset(n_per_class=6, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for label in (0, 1):
        for _ in range(n_per_class):
            frames = rng.random((4, 8, 8, 3)) * 0.3
            if label:
                frames[:, :, :4] += 0.6   # bright left half
            else:
                frames[:, :, 4:] += 0.6
            out.append((VideoClip(np.clip(frames, 0, 1).astype(np.float32), 30.0), label))
    return out


def test_pretrain_lr_zero_keeps_init():
    cfg = tiny_config()
    res = pretrain(separable_dataset(2), cfg, TrainHyper(lr=0.0, epochs=2, batch=2, seed=7))
    assert res.weights.equals(init_weights(cfg, 7))


def test_pretrain_separable_reaches_full_accuracy():
    cfg = tiny_config()
    res = pretrain(separable_dataset(), cfg, TrainHyper(lr=0.05, epochs=50, batch=4, seed=0))
    assert res.accuracy_trace[-1] == 1.0
    assert len(res.loss_trace) == 50


def test_first_step_decreases_loss():
    cfg = tiny_config()
    ds = separable_dataset(3)
    from perceptlab.encoders.train import dataset_arrays
    x, y = dataset_arrays(ds, cfg)
    w0 = init_weights(cfg, 8)
    loss0, _ = batch_loss_and_grads(x, y, cfg, w0)
    res = pretrain(ds, cfg, TrainHyper(lr=1e-3, epochs=1, batch=len(ds), seed=8, momentum=0.0))
    loss1, _ = batch_loss_and_grads(x, y, cfg, res.weights)
    assert loss1 < loss0


def test_pretrain_is_deterministic():
    cfg = tiny_config()
    a = pretrain(separable_dataset(2), cfg, TrainHyper(lr=0.05, epochs=3, batch=2, seed=9))
    b = pretrain(separable_dataset(2), cfg, TrainHyper(lr=0.05, epochs=3, batch=2, seed=9))
    assert a.weights.equals(b.weights) and a.loss_trace == b.loss_trace


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_pretrain_divergence_reports_epoch():
    cfg = tiny_config()
    with pytest.raises(TrainingError) as info:
        pretrain(separable_dataset(2), cfg, TrainHyper(lr=1e30, epochs=3, batch=2, seed=0))
    assert info.value.epoch == 0


# --- HOG ---------------------------------------------------------------------------

def test_hog_uniform_is_zero_and_lengths():
    assert np.all(hog_descriptor(np.full((64, 64, 3), 0.4)) == 0)
    assert hog_descriptor(np.zeros((64, 64, 3))).size == 1764 == hog_length(64, 64)
    assert hog_length(56, 56) == 1296
    with pytest.raises(InputError):
        hog_descriptor(np.zeros((15, 64, 3)))


def test_hog_vertical_edge_votes_in_bin_zero():
    f = np.zeros((32, 32, 3))
    f[:, 16:] = 1.0
    d = hog_descriptor(f).reshape(-1, 4, 9)
    assert d[..., 1:].max() == 0.0
    assert d[..., 0].max() > 0
    np.testing.assert_allclose(hog_descriptor(f), hog_brute(f), atol=1e-12)


def test_hog_matches_brute_force_100_trials():
    rng = np.random.default_rng(10)
    for _ in range(100):
        h, w = (int(v) for v in rng.integers(16, 33, size=2))
        f = rng.random((h, w, 3))
        assert rel_err(hog_descriptor(f), hog_brute(f)) <= 1e-5


# --- baselines ---------------------------------------------------------------------

def test_frame_average_examples():
    a = np.array([1.0, 2.0])
    b = np.array([3.0, 6.0])
    frames = np.zeros((2, 2, 2, 3), np.float32)
    frames[1] = 0.5
    clip = VideoClip(frames, 30.0)
    out = frame_avg_encode(clip, lambda f: a if f[0, 0, 0] == 0 else b)
    np.testing.assert_allclose(out, (a + b) / 2)


def test_frame_average_is_order_invariant_and_constant_clip():
    rng = np.random.default_rng(11)
    frames = rng.random((5, 16, 16, 3)).astype(np.float32)
    clip = VideoClip(frames, 30.0)
    shuffled = VideoClip(frames[rng.permutation(5)], 30.0)
    np.testing.assert_allclose(frame_avg_encode(clip, hog_descriptor), frame_avg_encode(shuffled, hog_descriptor),
                               atol=1e-12)
    same = VideoClip(np.repeat(frames[:1], 4, axis=0), 30.0)
    np.testing.assert_allclose(frame_avg_encode(same, hog_descriptor), hog_descriptor(frames[0]), atol=1e-12)


def test_baseline_encoders_shapes_and_seeding():
    clip = random_clip(np.random.default_rng(12), 20, 56, 56)
    f1 = baseline1()(clip)
    assert f1.shape == (64 * 4 * 4,)
    assert np.array_equal(f1, baseline1()(clip))
    assert not np.array_equal(f1, baseline1(seed=1)(clip))
    assert baseline2()(clip).shape == (1296,)
    stack = FrameConvStack()
    frames = clip.frames[:3]
    np.testing.assert_allclose(stack.batch(frames)[1], stack(frames[1]), rtol=1e-5, atol=1e-6)


# --- weight files ------------------------------------------------------------------

def test_weight_round_trip_bytes(tmp_path):
    cfg = desk_config()
    w = init_weights(cfg, 13)
    save_weights(w, tmp_path / "a.oslw")
    loaded = load_weights(tmp_path / "a.oslw", cfg)
    assert loaded.equals(w)
    save_weights(loaded, tmp_path / "b.oslw")
    assert (tmp_path / "a.oslw").read_bytes() == (tmp_path / "b.oslw").read_bytes()


def test_weight_file_layout():
    cfg = tiny_config()
    data = dumps(init_weights(cfg, 0))
    assert data[:4] == b"OSLW"
    version, count = struct.unpack("<II", data[4:12])
    assert version == 1 and count == len(cfg.tensor_shapes())
    (name_len,) = struct.unpack("<H", data[12:14])
    assert data[14:14 + name_len] == b"conv1.weight"


@pytest.mark.parametrize("mutate", [
    lambda d: b"XSLW" + d[4:],
    lambda d: d[:4] + struct.pack("<I", 2) + d[8:],
    lambda d: d[:-3],
    lambda d: d + b"\0",
])
def test_corrupt_weight_files_rejected(mutate):
    data = dumps(init_weights(tiny_config(), 0))
    with pytest.raises(FormatError):
        loads(mutate(data))


def test_weight_shape_mismatch_rejected():
    data = dumps(init_weights(tiny_config(num_classes=2), 0))
    with pytest.raises(FormatError):
        loads(data, tiny_config(num_classes=3))
