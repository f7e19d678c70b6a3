"""Brute-force reference implementations used by the tests.

Nothing here imports the search code. Splits are enumerated as boolean masks
straight from the raw feature values.
"""
from __future__ import annotations

import itertools

import numpy as np

CONTINUOUS, ORDERED, CATEGORICAL = 'continuous', 'ordered', 'categorical'


def split_masks(column: np.ndarray, kind: str) -> list[np.ndarray]:
    """Every distinct non-trivial partition of the rows by one feature.

    Numeric: ``x <= v`` for each distinct value but the largest.
    Categorical: every subset of the present categories that is non-empty
    and not everything (mirror images included; they are harmless).
    """
    values = np.unique(column)
    if len(values) < 2:
        return []
    if kind != CATEGORICAL:
        return [column <= v for v in values[:-1]]
    masks = []
    for size in range(1, len(values)):
        for subset in itertools.combinations(values, size):
            masks.append(np.isin(column, subset))
    return masks


def best_leaf(S: np.ndarray) -> float:
    return float(S.sum(axis=0).max())


def brute_force_reward(X, S, kinds, depth, min_leaf=1) -> float:
    """Largest total score over all trees of at most ``depth`` levels whose
    leaves hold at least ``min_leaf`` rows."""
    X = np.asarray(X, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)

    def solve(rows, level):
        leaf = best_leaf(S[rows])
        if level == 0 or len(rows) < 2 * min_leaf:
            return leaf
        best = leaf
        if level == 1:
            # vectorised stump: one row of the mask matrix per split
            Sn = S[rows]
            total = Sn.sum(axis=0)
            masks = [m for k, kind in enumerate(kinds)
                     for m in split_masks(X[rows, k], kind)]
            masks = [m for m in masks
                     if min_leaf <= m.sum() <= len(rows) - min_leaf]
            if masks:
                left = np.array(masks, dtype=np.float64) @ Sn
                right = total - left
                best = max(best, float(np.max(left.max(axis=1)
                                              + right.max(axis=1))))
            return best
        for k, kind in enumerate(kinds):
            for m in split_masks(X[rows, k], kind):
                lr, rr = rows[m], rows[~m]
                if len(lr) < min_leaf or len(rr) < min_leaf:
                    continue
                best = max(best, solve(lr, level - 1) + solve(rr, level - 1))
        return best

    return solve(np.arange(len(S)), depth)


def route(node, row) -> int:
    """Treatment of one feature row, walking the tree one node at a time."""
    while hasattr(node, 'rule'):
        rule = node.rule
        x = row[rule.feature_index]
        if rule.threshold is not None:
            go_left = x <= rule.threshold
        else:
            go_left = int(x) in rule.left_categories
        node = node.left if go_left else node.right
    return node.treatment


def route_all(tree, X) -> np.ndarray:
    return np.array([route(tree.root, row) for row in np.asarray(X)],
                    dtype=np.int64)


def welfare_of(S, assignments) -> float:
    S = np.asarray(S)
    return float(sum(S[i, a] for i, a in enumerate(assignments)))
