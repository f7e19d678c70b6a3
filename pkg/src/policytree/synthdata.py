"""Synthetic populations with a planted policy tree.

Scores are ``base_i + signal * [planted tree assigns j to row i] + noise``,
with a row baseline ``base_i ~ N(0, 1)`` shared by all treatments and i.i.d.
Gaussian noise on every score entry.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import FeatureKind, FeatureSpec, PolicyData
from .errors import BadSpec
from .tree import (Leaf, Node, PolicyTree, Split, SplitRule, assign,
                   leaf_index)


@dataclass(frozen=True)
class GeneratorSpec:
    n: int = 1000
    d: int = 2
    features: tuple[str, ...] = ('continuous', 'ordered', 'categorical')
    planted_depth: int = 2
    signal: float = 1.0
    noise_sd: float = 0.5
    seed: int = 0
    n_levels: int = 10
    n_categories: int = 4
    rule: PolicyTree | None = None

    def __post_init__(self):
        object.__setattr__(self, 'features', tuple(
            FeatureKind.parse(k).value for k in self.features))
        if self.n < 1 or self.d < 2 or not self.features:
            raise BadSpec('need n >= 1, d >= 2 and at least one feature')
        if self.planted_depth < 0 or self.noise_sd < 0:
            raise BadSpec('planted_depth and noise_sd must be >= 0')
        if self.n_levels < 2 or not 2 <= self.n_categories <= 63:
            raise BadSpec('need n_levels >= 2 and 2 <= n_categories <= 63')


def random_features(n: int, kinds: Sequence[str], rng, n_levels: int = 10,
                    n_categories: int = 4):
    """Continuous U(0, 1), ordered integers 0..n_levels-1 and uniform
    categories."""
    cols, specs = [], []
    for k, kind in enumerate(kinds):
        kind = FeatureKind.parse(kind)
        name = f'x{k}'
        if kind is FeatureKind.CONTINUOUS:
            cols.append(rng.uniform(0.0, 1.0, n))
            specs.append(FeatureSpec(name, kind))
        elif kind is FeatureKind.ORDERED:
            cols.append(rng.integers(0, n_levels, n).astype(np.float64))
            specs.append(FeatureSpec(name, kind))
        else:
            cols.append(rng.integers(0, n_categories, n).astype(np.float64))
            specs.append(FeatureSpec(name, kind, tuple(
                f'c{c}' for c in range(n_categories))))
    return np.column_stack(cols), tuple(specs)


def _random_rule(k, spec, rng, n_levels):
    if spec.kind is FeatureKind.CONTINUOUS:
        return SplitRule(k, threshold=float(rng.uniform(0.3, 0.7)))
    if spec.kind is FeatureKind.ORDERED:
        lo, hi = max(0, n_levels // 4 - 1), max(1, (3 * n_levels) // 4)
        return SplitRule(k, threshold=float(rng.integers(lo, hi)) + 0.5)
    c = len(spec.categories)
    size = int(rng.integers(1, c))
    members = rng.choice(c, size=size, replace=False)
    return SplitRule(k, left_categories=frozenset(int(m) for m in members))


def planted_tree(specs, d: int, depth: int, rng, n_levels: int = 10) -> Node:
    """Random full tree; the two leaves under every bottom split differ."""
    if depth == 0:
        return Leaf(int(rng.integers(0, d)))
    k = int(rng.integers(0, len(specs)))
    rule = _random_rule(k, specs[k], rng, n_levels)
    if depth == 1:
        lt, rt = rng.choice(d, size=2, replace=False)
        return Split(rule, Leaf(int(lt)), Leaf(int(rt)))
    return Split(rule, planted_tree(specs, d, depth - 1, rng, n_levels),
                 planted_tree(specs, d, depth - 1, rng, n_levels))


def _with_counts(node, idx, n, counter):
    if isinstance(node, Leaf):
        k = next(counter)
        count = int(np.sum(idx == k))
        return Leaf(node.treatment, count, count / n)
    left = _with_counts(node.left, idx, n, counter)
    right = _with_counts(node.right, idx, n, counter)
    return Split(node.rule, left, right)


def generate(spec: GeneratorSpec) -> tuple[PolicyData, PolicyTree]:
    """Draw a population and return it with the planted (oracle) tree."""
    rng = np.random.default_rng(spec.seed)
    X, specs = random_features(spec.n, spec.features, rng, spec.n_levels,
                               spec.n_categories)
    labels = tuple(f't{j}' for j in range(spec.d))
    if spec.rule is not None:
        oracle = spec.rule
        if oracle.d != spec.d or len(oracle.specs) != len(specs):
            raise BadSpec('planted rule does not match the generator spec')
    else:
        root = planted_tree(specs, spec.d, spec.planted_depth, rng,
                            spec.n_levels)
        oracle = PolicyTree(root, specs, labels, spec.planted_depth,
                            {'stages': 'planted'})
    base = rng.normal(size=spec.n)
    noise = rng.normal(scale=spec.noise_sd, size=(spec.n, spec.d))
    placeholder = PolicyData(X, np.zeros((spec.n, spec.d)), specs, labels)
    planted = assign(oracle, placeholder)
    scores = base[:, None] + noise
    scores[np.arange(spec.n), planted] += spec.signal
    idx, _ = leaf_index(oracle, X)
    oracle = oracle.replace(root=_with_counts(oracle.root, idx, spec.n,
                                              iter(range(10 ** 9))))
    data = PolicyData(X, scores, specs, labels,
                      row_ids=tuple(str(i) for i in range(spec.n)))
    return data, oracle


def random_instance(n: int, d: int, kinds: Sequence[str], seed: int,
                    n_levels: int = 6, n_categories: int = 4) -> PolicyData:
    """Random features with i.i.d. standard normal scores (no structure)."""
    rng = np.random.default_rng(seed)
    X, specs = random_features(n, kinds, rng, n_levels, n_categories)
    for k, s in enumerate(specs):
        if s.kind is FeatureKind.CATEGORICAL:
            present = np.unique(X[:, k])
            if len(present) < 2:
                X[0, k], X[1, k] = 0.0, 1.0
    scores = rng.normal(size=(n, d))
    return PolicyData(X, scores, specs, tuple(f't{j}' for j in range(d)))
