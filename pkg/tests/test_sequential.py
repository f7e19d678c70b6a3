import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_force_reward, route_all, welfare_of
from policytree.data import FeatureSpec, PolicyData
from policytree.errors import BadConfig
from policytree.search import SearchConfig, search
from policytree.sequential import parse_stages, search_sequential
from policytree.synthdata import GeneratorSpec, generate, random_instance
from policytree.tree import node_depth, to_json

KINDS = ('continuous', 'ordered', 'categorical')
EXACT = SearchConfig(exact_mode=True, min_leaf_size=1)


def test_parse_stages():
    assert parse_stages('3+1') == (3, [1])
    assert parse_stages('2+2') == (2, [1, 1])
    assert parse_stages('2+2,1') == (2, [2, 1])
    assert parse_stages('2') == (2, [])


def test_no_extra_stage_is_plain_search():
    data = random_instance(60, 2, KINDS, 1)
    cfg = SearchConfig(depth=2)
    assert (to_json(search_sequential(data, 2, [], cfg).tree)
            == to_json(search(data, cfg).tree))


@given(seed=st.integers(0, 10 ** 6))
def test_sandwich(seed):
    data = random_instance(24, 3, KINDS, seed, n_levels=5)
    r2 = search(data, EXACT.replace(depth=2)).reward
    seq = search_sequential(data, 2, [1], EXACT)
    r3 = search(data, EXACT.replace(depth=3)).reward
    assert r2 - 1e-9 <= seq.reward <= r3 + 1e-9
    assert seq.reward == pytest.approx(
        welfare_of(data.scores, route_all(seq.tree, data.features)))


def test_sequential_tree_shape_and_metadata():
    data = random_instance(400, 3, KINDS, 9)
    res = search_sequential(data, 2, [1, 1], SearchConfig())
    assert res.tree.depth == 4 and node_depth(res.tree.root) <= 4
    assert res.tree.metadata['stages'] == '2+2'
    assert res.tree.metadata['stage_depths'] == [2, 1, 1]
    assert sum(leaf.n_train for leaf in res.tree.leaves()) == 400
    assert sum(leaf.train_share for leaf in res.tree.leaves()
               ) == pytest.approx(1.0)


def test_parallel_strata_are_deterministic():
    data = random_instance(500, 3, KINDS, 3, n_categories=5)
    one = search_sequential(data, 2, [2], SearchConfig(threads=1))
    many = search_sequential(data, 2, [2], SearchConfig(threads=4))
    assert to_json(one.tree) == to_json(many.tree)


def test_bad_depths():
    data = random_instance(30, 2, KINDS, 0)
    with pytest.raises(BadConfig):
        search_sequential(data, -1, [])
    with pytest.raises(BadConfig):
        search_sequential(data, 2, [0])


def test_one_plus_one_finds_a_nested_rule():
    # treatment 1 pays only when x0 > 0.5 and x1 > 0.5, and x0 alone already
    # separates the best first split
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(200, 2))
    S = np.zeros((200, 2))
    S[:, 1] = np.where(X[:, 0] > 0.5, np.where(X[:, 1] > 0.5, 1.0, -0.2),
                       -1.0)
    data = PolicyData(X, S, (FeatureSpec('x0', 'continuous'),
                             FeatureSpec('x1', 'continuous')), ('a', 'b'))
    seq = search_sequential(data, 1, [1], EXACT)
    opt = search(data, EXACT.replace(depth=2))
    assert seq.reward == pytest.approx(opt.reward)
    assert seq.reward == pytest.approx(brute_force_reward(
        X, S, ['continuous', 'continuous'], 2))


@pytest.mark.parametrize('fraction', [0.95])
def test_sequential_is_comparable_to_optimal(fraction):
    # heuristic, not a theorem: holds on planted depth-2 rules, often fails
    # when the planted rule itself is three levels deep
    for seed in range(10):
        data, _ = generate(GeneratorSpec(n=300, d=3, planted_depth=2,
                                         seed=seed))
        base = search(data, SearchConfig(depth=0)).reward
        seq = search_sequential(data, 2, [1], SearchConfig()).reward
        opt = search(data, SearchConfig(depth=3)).reward
        assert seq >= base + fraction * (opt - base) - 1e-9
