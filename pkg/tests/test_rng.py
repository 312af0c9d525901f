"""Tests for named seed substreams."""

import numpy as np

from gtftlab.rng import ensure_rng, stream


def test_same_key_reproduces():
    a = stream(7, "mixing", 3).random(5)
    b = stream(7, "mixing", 3).random(5)
    np.testing.assert_array_equal(a, b)


def test_distinct_keys_diverge():
    a = stream(7, "mixing", 3).random(5)
    b = stream(7, "mixing", 4).random(5)
    c = stream(7, "payoff", 3).random(5)
    d = stream(8, "mixing", 3).random(5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_ensure_rng_passthrough_and_seed():
    gen = np.random.default_rng(3)
    assert ensure_rng(gen) is gen
    np.testing.assert_array_equal(ensure_rng(3).random(4), np.random.default_rng(3).random(4))
