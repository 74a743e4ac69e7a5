import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from cftpp.randomness import Label, Stream, StreamKey, make_stream


def test_same_key_same_draws():
    a = make_stream(42, (Label.REALIZATION, 3)).uniform(1000)
    b = make_stream(42, (Label.REALIZATION, 3)).uniform(1000)
    assert np.array_equal(a, b)


def test_distinct_keys_differ():
    a = make_stream(42, (Label.REALIZATION, 3)).uniform(100)
    b = make_stream(42, (Label.REALIZATION, 4)).uniform(100)
    c = make_stream(43, (Label.REALIZATION, 3)).uniform(100)
    d = make_stream(42, (Label.REPLICATE, 3)).uniform(100)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_path_not_ambiguous():
    # (1, 23) and (12, 3) must not collide
    a = make_stream(0, (1, 23)).uniform(10)
    b = make_stream(0, (12, 3)).uniform(10)
    assert not np.array_equal(a, b)


@given(st.lists(st.integers(1, 700), min_size=1, max_size=8))
@settings(max_examples=40, deadline=None)
def test_batched_equals_scalar(sizes):
    s1, s2 = make_stream(9, (1, 1)), make_stream(9, (1, 1))
    batched = np.concatenate([s1.uniform(n) for n in sizes])
    scalar = np.array([s2.uniform() for _ in range(sum(sizes))])
    assert np.array_equal(batched, scalar)


def test_child_does_not_consume_parent():
    s1, s2 = make_stream(5), make_stream(5)
    s1.child(Label.BRANCH, 0).uniform(50)
    assert np.array_equal(s1.uniform(20), s2.uniform(20))
    assert s1.child(2, 7).key == StreamKey(5, ((2, 7),))


def test_uniform_open_interval():
    u = make_stream(1).uniform(200_000)
    assert u.min() > 0 and u.max() < 1


def test_exponential_mean():
    # mean 11.4, sd 11.4: 1e5 draws give se ~0.036
    x = make_stream(2).exponential(1 / 11.4, 100_000)
    assert abs(x.mean() - 11.4) < 0.15


def test_exponential_rejects_bad_rate():
    with pytest.raises(ValueError):
        make_stream(2).exponential(0.0)


def test_gumbel_distribution():
    g = make_stream(3).gumbel(50_000)
    assert stats.kstest(g, "gumbel_r").pvalue > 1e-3
    assert abs(g.mean() - np.euler_gamma) < 0.03


def test_normal_distribution():
    z = make_stream(4).normal(2.0, 50_000)
    assert stats.kstest(z / 2.0, "norm").pvalue > 1e-3
    assert make_stream(4).normal(0.0) == 0.0


def test_bernoulli_edges():
    s = make_stream(6)
    assert not s.bernoulli(0.0, 10_000).any()
    assert s.bernoulli(1.0, 10_000).all()
    assert abs(s.bernoulli(0.3, 100_000).mean() - 0.3) < 0.005


def test_integers_and_permutation():
    s = make_stream(7)
    k = s.integers(5, 50_000)
    assert k.min() == 0 and k.max() == 4
    assert stats.chisquare(np.bincount(k)).pvalue > 1e-3
    p = s.permutation(100)
    assert sorted(p.tolist()) == list(range(100))


def test_key_validation():
    with pytest.raises(ValueError):
        StreamKey(-1)
    with pytest.raises(ValueError):
        StreamKey(2 ** 64)
    with pytest.raises(ValueError):
        make_stream(0, (1, -1))
    Stream(2 ** 64 - 1).uniform()


def test_large_index_path():
    u = make_stream(1, (Label.REALIZATION, 2 ** 63)).uniform()
    assert 0 < u < 1 and not math.isnan(u)
