import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnndbn.numerics import bernoulli_sample, make_rng, pack, sigmoid, unpack
from rnndbn.rbm import RbmParams


def test_sigmoid_known_values():
    assert sigmoid([0.0])[0] == 0.5
    assert sigmoid([math.log(3.0)])[0] == pytest.approx(0.75, abs=1e-15)


@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_sigmoid_symmetry(x):
    assert sigmoid([-x])[0] == pytest.approx(1.0 - sigmoid([x])[0], abs=1e-15)


@given(st.floats(-1e4, 1e4))
def test_sigmoid_complement_and_open_interval(x):
    s, s_neg = sigmoid([x])[0], sigmoid([-x])[0]
    assert abs(s + s_neg - 1.0) < 1e-12
    assert 0.0 < s < 1.0


@given(st.floats(-20, 20), st.floats(1e-3, 5))
def test_sigmoid_strictly_increasing(x, gap):
    assert sigmoid([x + gap])[0] > sigmoid([x])[0]


def test_sigmoid_extremes_are_finite_without_warnings():
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        out = sigmoid([-1e6, -600.0, 600.0, 1e6])
    assert np.all(out > 0) and np.all(out < 1)
    assert np.all(np.isfinite(np.log(out))) and np.all(np.isfinite(np.log1p(-out)))


def test_bernoulli_degenerate_probabilities(rng):
    for _ in range(100):
        assert bernoulli_sample([0.0, 1.0], rng).tolist() == [0.0, 1.0]


def test_bernoulli_reproducible_with_seed():
    a = bernoulli_sample([0.5] * 4, make_rng(7))
    b = bernoulli_sample([0.5] * 4, make_rng(7))
    assert np.array_equal(a, b)


def test_bernoulli_monte_carlo_mean():
    n = 100_000
    draws = bernoulli_sample(np.full(n, 0.3), make_rng(1))
    assert set(np.unique(draws)) <= {0.0, 1.0}
    assert abs(draws.mean() - 0.3) < 0.01
    assert abs(draws.mean() - 0.3) < 4 * math.sqrt(0.3 * 0.7 / n)


@pytest.mark.parametrize("bad", [[-0.1], [1.5], [float("nan")]])
def test_bernoulli_rejects_bad_probabilities(rng, bad):
    with pytest.raises(ValueError):
        bernoulli_sample(bad, rng)


@given(st.integers(0, 2**64 - 1))
@settings(max_examples=25)
def test_same_seed_same_stream(seed):
    assert np.array_equal(make_rng(seed).random(16), make_rng(seed).random(16))


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range_enforced(seed):
    with pytest.raises(ValueError):
        make_rng(seed)


def test_pack_unpack_round_trip(rng):
    p = RbmParams(rng.normal(size=(3, 2)), rng.normal(size=2), rng.normal(size=3))
    q = unpack(p, pack(p))
    assert all(np.array_equal(getattr(p, f), getattr(q, f)) for f in ("W", "b_v", "b_h"))
