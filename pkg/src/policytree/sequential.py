"""Sequentially optimal trees: an optimal first tree, then optimal sub-trees
grown inside the strata of its leaves ("2+1", "3+2", ...)."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .data import PolicyData
from .errors import BadConfig
from .search import (SearchConfig, SearchResult, finalize, search,
                     seen_categories)
from .tree import Leaf, PolicyTree, Split, leaf_index


def _graft(node, replacements, counter):
    if isinstance(node, Leaf):
        k = next(counter)
        return replacements.get(k, node)
    left = _graft(node.left, replacements, counter)
    right = _graft(node.right, replacements, counter)
    return Split(node.rule, left, right)


def _rescale_leaves(node, n_total):
    if isinstance(node, Leaf):
        return Leaf(node.treatment, node.n_train, node.n_train / n_total)
    return Split(node.rule, _rescale_leaves(node.left, n_total),
                 _rescale_leaves(node.right, n_total))


def search_sequential(data: PolicyData, first_depth: int,
                      extra_depths: Sequence[int],
                      config: SearchConfig = SearchConfig()) -> SearchResult:
    """Grow an optimal tree of ``first_depth``, then for each entry of
    ``extra_depths`` replace every current leaf whose stratum has at least
    ``2 * min_leaf_size`` rows by an optimal sub-tree of that depth.

    Each sub-search restarts the level-dependent approximation from its own
    depth. Strata are searched in leaf order (in parallel when
    ``config.threads > 1``) and grafted in leaf order.
    """
    start = time.perf_counter()
    if first_depth < 0 or any(e < 1 for e in extra_depths):
        raise BadConfig('first depth must be >= 0 and extra depths >= 1')
    extra_depths = [int(e) for e in extra_depths]
    first = search(data, config.replace(depth=first_depth))
    if not extra_depths:
        return first
    min_leaf = config.resolved_min_leaf(data.d)
    root = first.tree.root
    evaluated = first.nodes_evaluated
    depth = first_depth
    for extra in extra_depths:
        tree = PolicyTree(root, data.specs, data.treatment_labels, depth)
        idx, _ = leaf_index(tree, data.features)
        strata = [np.nonzero(idx == k)[0] for k in range(tree.n_leaves())]
        todo = [k for k, rows in enumerate(strata)
                if len(rows) >= 2 * min_leaf]
        sub_cfg = config.replace(depth=extra, threads=1)

        def run(k):
            return search(data.subset(strata[k]), sub_cfg)

        if config.threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                results = list(pool.map(run, todo))
        else:
            results = [run(k) for k in todo]
        replacements = {}
        for k, res in zip(todo, results):
            evaluated += res.nodes_evaluated
            replacements[k] = res.tree.root
        root = _graft(root, replacements, iter(range(10 ** 9)))
        depth += extra
    root = _rescale_leaves(root, data.n)
    meta = {'config': config.replace(depth=depth).snapshot(data.d),
            'stages': f'{first_depth}+{sum(extra_depths)}',
            'stage_depths': [first_depth] + extra_depths,
            'seen_categories': seen_categories(data)}
    tree = PolicyTree(root, data.specs, data.treatment_labels, depth, meta)
    tree, reward = finalize(tree, data)
    return SearchResult(tree, reward, evaluated, time.perf_counter() - start)


def parse_stages(text: str) -> tuple[int, list[int]]:
    """Read a stage label: ``"3"`` -> ``(3, [])``, ``"2+2"`` -> ``(2, [1, 1])``.

    ``+Y`` means ``Y`` successive depth-1 stages. Explicit stage depths are
    given with a comma after the plus sign: ``"2+2,1"`` -> ``(2, [2, 1])``.
    """
    head, _, tail = str(text).partition('+')
    first = int(head)
    if not tail:
        return first, []
    parts = [int(p) for p in tail.split(',')]
    if len(parts) == 1:
        return first, [1] * parts[0]
    return first, parts
