import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import central_difference, conv3d_brute, maxpool3d_brute, rel_err

from perceptlab.encoders.layers import (
    conv3d_backward,
    conv3d_forward,
    maxpool3d_backward,
    maxpool3d_forward,
    pool_output_shape,
)
from perceptlab.errors import ConfigurationError


def test_conv_center_tap():
    x = np.array([[[[2.0]]]])
    k = np.zeros((1, 1, 3, 3, 3))
    k[0, 0, 1, 1, 1] = 3.0
    out = conv3d_forward(x, k, np.array([0.5]), activation=False)
    assert out.shape == (1, 1, 1, 1) and out[0, 0, 0, 0] == pytest.approx(6.5)


def test_conv_zero_kernel_gives_bias():
    x = np.random.default_rng(0).random((2, 3, 4, 4))
    out = conv3d_forward(x, np.zeros((3, 2, 3, 3, 3)), np.array([1.0, -2.0, 0.5]), activation=False)
    for o, b in enumerate([1.0, -2.0, 0.5]):
        assert np.all(out[o] == b)


def test_conv_shape_mismatch():
    with pytest.raises(ConfigurationError):
        conv3d_forward(np.zeros((2, 3, 4, 4)), np.zeros((3, 4, 3, 3, 3)), np.zeros(3))
    with pytest.raises(ConfigurationError):
        conv3d_forward(np.zeros((2, 3, 4, 4)), np.zeros((3, 2, 3, 3, 3)), np.zeros(2))


def test_conv_matches_brute_force_100_trials():
    rng = np.random.default_rng(1)
    for trial in range(100):
        c_in, c_out = rng.integers(1, 4, size=2)
        t, h, w = rng.integers(1, 5, size=3)
        x = rng.normal(size=(c_in, t, h, w)).astype(np.float32)
        k = rng.normal(size=(c_out, c_in, 3, 3, 3)).astype(np.float32)
        b = rng.normal(size=c_out).astype(np.float32)
        relu = bool(trial % 2)
        got = conv3d_forward(x, k, b, activation=relu)
        assert rel_err(got, conv3d_brute(x, k, b, relu)) <= 1e-5


def test_conv_spec_example_shape():
    rng = np.random.default_rng(2)
    x = rng.random((2, 3, 4, 4))
    k = rng.normal(size=(2, 2, 3, 3, 3))
    b = rng.normal(size=2)
    assert rel_err(conv3d_forward(x, k, b, False), conv3d_brute(x, k, b, False)) <= 1e-5


def test_conv_batched_equals_single():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(3, 2, 2, 5, 5))
    k = rng.normal(size=(4, 2, 3, 3, 3))
    b = rng.normal(size=4)
    batch = conv3d_forward(x, k, b)
    for n in range(3):
        np.testing.assert_allclose(batch[n], conv3d_forward(x[n], k, b), rtol=1e-12, atol=1e-12)


def test_pool_examples():
    v = np.arange(8, dtype=np.float64).reshape(1, 2, 2, 2)
    assert maxpool3d_forward(v, (2, 2, 2)).ravel().tolist() == [7.0]
    c = np.full((2, 3, 5, 5), 0.7)
    out = maxpool3d_forward(c, (2, 2, 2))
    assert out.shape == (2, 2, 3, 3) and np.all(out == 0.7)


def test_pool_matches_brute_force_100_trials():
    rng = np.random.default_rng(4)
    for _ in range(100):
        shape = tuple(int(s) for s in rng.integers(1, 7, size=4))
        window = tuple(int(s) for s in rng.integers(1, 4, size=3))
        x = rng.normal(size=shape)
        got = maxpool3d_forward(x, window)
        want = maxpool3d_brute(x, window)
        assert got.shape == want.shape
        assert np.array_equal(got, want)


@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 40), st.integers(1, 4), st.integers(1, 4),
       st.integers(1, 4))
def test_pool_output_shape_is_ceil(t, h, w, a, b, c):
    assert pool_output_shape((t, h, w), (a, b, c)) == (-(-t // a), -(-h // b), -(-w // c))


def test_conv_gradients_match_finite_differences():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(1, 2, 2, 3, 3))
    k = rng.normal(size=(2, 2, 3, 3, 3)) * 0.3
    b = rng.normal(size=2) * 0.1
    g = rng.normal(size=(1, 2, 2, 3, 3))

    def f():
        return float(np.sum(conv3d_forward(x, k, b, activation=True) * g))

    out, cache = conv3d_forward(x, k, b, activation=True, return_cache=True)
    dx, dk, db = conv3d_backward(g, cache)
    assert rel_err(dx, central_difference(f, x)) < 1e-6
    assert rel_err(dk, central_difference(f, k)) < 1e-6
    assert rel_err(db, central_difference(f, b)) < 1e-6


def test_pool_gradient_matches_finite_differences():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(1, 2, 3, 5, 5))
    g = rng.normal(size=(1, 2, 2, 3, 3))

    def f():
        return float(np.sum(maxpool3d_forward(x, (2, 2, 2)) * g))

    _, cache = maxpool3d_forward(x, (2, 2, 2), return_cache=True)
    assert rel_err(maxpool3d_backward(g, cache), central_difference(f, x)) < 1e-6
