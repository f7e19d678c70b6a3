import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import DATA_DIR, rhc_tree
from oracles import route_all
from policytree.data import FeatureSpec, PolicyData
from policytree.errors import (MalformedTree, SchemaVersionUnsupported,
                               SpecMismatch)
from policytree.synthdata import planted_tree, random_features
from policytree.tree import (Leaf, PolicyTree, Split, SplitRule, assign,
                             format_threshold, from_json, leaf_index,
                             render_rules, to_dot, to_json)

KINDS = ('continuous', 'ordered', 'categorical')


def random_tree(seed, depth=3, d=3):
    rng = np.random.default_rng(seed)
    X, specs = random_features(50, KINDS, rng)
    root = planted_tree(specs, d, depth, rng)
    return PolicyTree(root, specs, tuple(f't{j}' for j in range(d)), depth,
                      {'stages': str(depth)}), X


def test_rule_needs_exactly_one_condition():
    with pytest.raises(MalformedTree):
        SplitRule(0)
    with pytest.raises(MalformedTree):
        SplitRule(0, threshold=1.0, left_categories={1})


def test_tree_validation():
    specs = (FeatureSpec('x', 'continuous'),
             FeatureSpec('c', 'categorical', ('a', 'b', 'c')))
    with pytest.raises(MalformedTree):
        PolicyTree(Leaf(2), specs, ('u', 'v'), 0)
    with pytest.raises(MalformedTree):
        PolicyTree(Split(SplitRule(0, 1.0), Leaf(0), Leaf(1)), specs,
                   ('u', 'v'), 0)
    with pytest.raises(MalformedTree):
        PolicyTree(Split(SplitRule(1, 1.0), Leaf(0), Leaf(1)), specs,
                   ('u', 'v'), 1)
    with pytest.raises(MalformedTree):
        PolicyTree(Split(SplitRule(1, left_categories={0, 1, 2}), Leaf(0),
                         Leaf(1)), specs, ('u', 'v'), 1)


@given(seed=st.integers(0, 10 ** 6), depth=st.integers(0, 4))
def test_json_round_trip(seed, depth):
    tree, _ = random_tree(seed, depth)
    text = to_json(tree)
    back = from_json(text)
    assert back == tree
    assert to_json(back) == text


@given(seed=st.integers(0, 10 ** 6))
def test_routing_matches_row_by_row_walk(seed):
    tree, X = random_tree(seed)
    idx, unseen = leaf_index(tree, X)
    treat = np.array([leaf.treatment for leaf in tree.leaves()])[idx]
    assert np.array_equal(treat, route_all(tree, X))
    assert unseen == 0


def test_threshold_survives_json_exactly():
    specs = (FeatureSpec('x', 'continuous'),)
    thr = 0.1 + 0.2
    tree = PolicyTree(Split(SplitRule(0, thr), Leaf(0), Leaf(1)), specs,
                      ('a', 'b'), 1)
    assert from_json(to_json(tree)).root.rule.threshold == thr


def test_from_json_errors():
    good = json.loads(to_json(rhc_tree()))
    with pytest.raises(SchemaVersionUnsupported):
        from_json(json.dumps({**good, 'format_version': 2}))
    bad = json.loads(json.dumps(good))
    bad['tree']['treatment'] = 0
    with pytest.raises(MalformedTree):
        from_json(json.dumps(bad))
    with pytest.raises(MalformedTree):
        from_json('{not json')
    missing = dict(good)
    del missing['treatment_labels']
    with pytest.raises(MalformedTree):
        from_json(json.dumps(missing))


def test_unseen_category_routes_right_and_is_counted():
    specs = (FeatureSpec('c', 'categorical', ('a', 'b', 'z')),)
    tree = PolicyTree(Split(SplitRule(0, left_categories={0}), Leaf(0),
                            Leaf(1)), specs[:1], ('u', 'v'), 1,
                      {'seen_categories': {'c': [0, 1]}})
    data = PolicyData([[0.0], [1.0], [2.0], [2.0]], np.zeros((4, 2)), specs,
                      ('u', 'v'))
    treat, unseen = assign(tree, data, return_unseen=True)
    assert treat.tolist() == [0, 1, 1, 1]
    assert unseen == 2


def test_spec_mismatch():
    tree = rhc_tree()
    other = PolicyData(np.zeros((2, 2)), np.zeros((2, 2)),
                       (FeatureSpec('age', 'continuous'),
                        FeatureSpec('sex', 'continuous')), ('a', 'b'))
    with pytest.raises(SpecMismatch):
        assign(tree, other)
    wrong_kind = PolicyData(np.zeros((2, 2)), np.zeros((2, 2)),
                            (FeatureSpec('age', 'ordered'),
                             FeatureSpec('surv2md1', 'continuous')),
                            ('a', 'b'))
    with pytest.raises(SpecMismatch):
        assign(tree, wrong_kind)


@pytest.mark.parametrize('value,text', [
    (65.0, '65'), (0.48, '0.480'), (0.402, '0.402'), (-3.0, '-3'),
    (0.1 + 0.2, '0.30000000000000004'), (2.5, '2.500')])
def test_format_threshold(value, text):
    assert format_threshold(value) == text
    assert float(text) == value


def test_depth2_rules_golden():
    expected = (DATA_DIR / 'rhc_depth2_rules.txt').read_text(encoding='utf-8')
    assert render_rules(rhc_tree()) == expected


def test_single_leaf_and_categorical_rendering():
    specs = (FeatureSpec('cat1', 'categorical',
                         tuple(str(i) for i in range(10))),)
    leaf = PolicyTree(Leaf(1), specs, ('a', 'b'), 0)
    assert render_rules(leaf) == '(all) → b\n'
    tree = PolicyTree(Split(SplitRule(0, left_categories={0, 1, 2, 6, 8}),
                            Leaf(0), Leaf(1)), specs, ('a', 'b'), 1)
    assert render_rules(tree) == ('cat1 in: 0 1 2 6 8 → a\n'
                                  'cat1 not in: 0 1 2 6 8 → b\n')


def test_render_with_shares():
    tree = rhc_tree()
    data = PolicyData([[60, 0.1], [60, 0.9], [70, 0.1], [70, 0.2]],
                      np.zeros((4, 2)), tree.specs, tree.treatment_labels)
    lines = render_rules(tree, data).splitlines()
    assert lines[0].endswith('(25.00%)') and lines[3].endswith('(0.00%)')


def test_dot_export():
    text = to_dot(rhc_tree())
    assert text.startswith('digraph policy_tree {')
    assert text.count('shape=box') == 3 and text.count('shape=ellipse') == 4
    assert 'n0 [label="age ≤ 65", shape=box];' in text
    assert 'n0 -> n1 [label="yes"];' in text
    assert 'n0 -> n4 [label="no"];' in text
    specs = (FeatureSpec('x', 'continuous'),)
    quoted = PolicyTree(Leaf(0), specs, ('say "hi"', 'b'), 0)
    assert 'say \\"hi\\"\\n0.0%' in to_dot(quoted)
