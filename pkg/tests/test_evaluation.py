import numpy as np
import pytest
from hypothesis import given, strategies as st

from policytree.errors import BadShares, LengthMismatch
from policytree.evaluation import (Allocation, allocate_best_score,
                                   allocate_observed, allocate_random,
                                   allocate_tree, evaluate,
                                   random_welfare_expectation)
from policytree.search import SearchConfig, search
from policytree.synthdata import random_instance


def test_best_score_ties_go_low():
    assert allocate_best_score([[1, 2], [3, 0]]).assignments.tolist() == [1, 0]
    assert allocate_best_score(np.ones((3, 2))).assignments.tolist() == [0] * 3


def test_random_allocation():
    assert allocate_random(7, (1.0, 0.0), 3).assignments.tolist() == [0] * 7
    a = allocate_random(100000, (0.5, 0.5), 1)
    assert abs(a.assignments.mean() - 0.5) < 0.01
    assert np.array_equal(a.assignments,
                          allocate_random(100000, (0.5, 0.5), 1).assignments)
    with pytest.raises(BadShares):
        allocate_random(5, (0.5, 0.6), 0)
    with pytest.raises(BadShares):
        allocate_random(5, (1.5, -0.5), 0)


def test_random_welfare_within_three_standard_errors():
    rng = np.random.default_rng(2)
    S = rng.normal(size=(100000, 3)) + [0.0, 0.5, 1.0]
    shares = (0.2, 0.3, 0.5)
    alloc = allocate_random(len(S), shares, 9)
    w = S[np.arange(len(S)), alloc.assignments]
    se = w.std() / np.sqrt(len(S))
    assert abs(w.mean() - random_welfare_expectation(S, shares)) < 3 * se


def test_evaluate_simple():
    rep = evaluate([Allocation('p', [0, 1], 'Tree')], [[1, 0], [0, 1]],
                   ('a', 'b'))
    row = rep.rows[0]
    assert row.welfare_mean == 1.0 and row.treatment_shares == (0.5, 0.5)
    with pytest.raises(LengthMismatch):
        evaluate([Allocation('p', [0], 'Tree')], [[1, 0], [0, 1]], ('a', 'b'))


@given(seed=st.integers(0, 10 ** 6), lam=st.floats(0.1, 10),
       c=st.floats(-10, 10))
def test_evaluate_is_affine(seed, lam, c):
    rng = np.random.default_rng(seed)
    S = rng.normal(size=(50, 3))
    alloc = Allocation('r', rng.integers(0, 3, 50), 'Random')
    a = evaluate([alloc], S, 'abc').rows[0]
    b = evaluate([alloc], lam * S + c, 'abc').rows[0]
    assert b.welfare_mean == pytest.approx(lam * a.welfare_mean + c,
                                           abs=1e-9)


@given(seed=st.integers(0, 10 ** 6))
def test_best_score_dominates(seed):
    data = random_instance(60, 3, ('continuous', 'categorical'), seed)
    tree = search(data, SearchConfig(depth=2)).tree
    rng = np.random.default_rng(seed)
    rep = evaluate([allocate_best_score(data.scores),
                    allocate_tree(tree, data),
                    Allocation('obs', rng.integers(0, 3, 60), 'Observed')],
                   data.scores, data.treatment_labels)
    best = rep.rows[0].welfare_mean
    assert all(best >= r.welfare_mean - 1e-12 for r in rep.rows)
    for r in rep.rows:
        assert sum(r.treatment_shares) == pytest.approx(1.0, abs=1e-9)


def test_observed_is_optional():
    data = random_instance(5, 2, ('continuous',), 0)
    assert allocate_observed(data) is None


def test_text_and_csv_agree():
    rng = np.random.default_rng(0)
    S = rng.normal(size=(20, 2))
    rep = evaluate([allocate_best_score(S), allocate_random(20, (0.5, 0.5), 1)],
                   S, ('no', 'yes'), notices=('hello',))
    text = rep.to_text().splitlines()
    csv_rows = [line.split(',') for line in rep.to_csv().splitlines()]
    assert csv_rows[0] == ['policy', 'welfare_mean', 'share_0', 'share_1', 'n']
    for line, row in zip(text[2:], csv_rows[1:]):
        fields = line.rsplit(None, 3)
        assert float(fields[1]) == pytest.approx(float(row[1]), abs=5e-5)
        assert float(fields[2]) == pytest.approx(100 * float(row[2]),
                                                 abs=5e-3)
    assert text[-1] == 'note: hello'
