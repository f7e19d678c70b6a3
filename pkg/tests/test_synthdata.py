import numpy as np
import pytest
from hypothesis import given, strategies as st

from policytree.errors import BadSpec
from policytree.evaluation import (allocate_best_score, allocate_random,
                                   evaluate)
from policytree.synthdata import GeneratorSpec, generate
from policytree.tree import assign


def test_bad_spec():
    for bad in [dict(n=0), dict(d=1), dict(features=()), dict(noise_sd=-1),
                dict(n_categories=1)]:
        with pytest.raises(BadSpec):
            GeneratorSpec(**bad)


def test_deterministic_under_seed():
    spec = GeneratorSpec(n=200, d=3, seed=4)
    (a, oa), (b, ob) = generate(spec), generate(spec)
    assert a == b and oa == ob


@given(seed=st.integers(0, 10 ** 6), depth=st.integers(0, 3))
def test_scores_follow_the_planted_rule(seed, depth):
    spec = GeneratorSpec(n=300, d=3, planted_depth=depth, noise_sd=0.0,
                         signal=2.0, seed=seed)
    data, oracle = generate(spec)
    planted = assign(oracle, data)
    gap = data.scores - data.scores.min(axis=1, keepdims=True)
    assert np.allclose(gap[np.arange(300), planted], 2.0)
    assert np.allclose(gap.sum(axis=1), 2.0)
    # noise-free: the oracle is as good as any allocation
    best = evaluate([allocate_best_score(data.scores)], data.scores, 'abc')
    assert data.scores[np.arange(300), planted].mean() == pytest.approx(
        best.rows[0].welfare_mean)
    assert sum(leaf.n_train for leaf in oracle.leaves()) == 300


def test_zero_signal_leaves_nothing_to_learn():
    data, _ = generate(GeneratorSpec(n=20000, d=2, signal=0.0, seed=3))
    means = data.scores.mean(axis=0)
    assert abs(means[0] - means[1]) < 0.03


def test_zero_signal_without_noise_makes_every_policy_equal():
    data, _ = generate(GeneratorSpec(n=500, d=3, signal=0.0, noise_sd=0.0,
                                     seed=8))
    rep = evaluate([allocate_best_score(data.scores),
                    allocate_random(500, (0.2, 0.3, 0.5), 1)],
                   data.scores, 'abc')
    assert rep.rows[0].welfare_mean == pytest.approx(rep.rows[1].welfare_mean)
