"""Exhaustive depth-limited search for the welfare-maximising policy tree.

Depth counts split levels: depth 0 is a single leaf, depth 2 has up to four
leaves. A node with ``level`` split levels left below it gets
``max(2, A // 2**(level-1))`` threshold candidates per numeric feature, so a
depth-4 tree uses A/8, A/4, A/2 and A from the root down. The same halving
applies to the categorical combination budget.

Ties are broken towards the lowest treatment index, then the lowest feature
index, then the lowest threshold or the lexicographically smallest category
set. Rewards closer than a tolerance scaled to the score magnitude count as
ties, which keeps the chosen tree stable under shifts and rescaling of the
scores.
"""
from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .data import FeatureKind, FeatureSpec, PolicyData
from .errors import BadConfig, SearchTimeout, TooFewRows
from .tree import Leaf, PolicyTree, Split, SplitRule, leaf_index

_KIND_CODE = {FeatureKind.CONTINUOUS: _kernels.KIND_CONTINUOUS,
              FeatureKind.ORDERED: _kernels.KIND_ORDERED,
              FeatureKind.CATEGORICAL: _kernels.KIND_CATEGORICAL}

# full enumeration of category subsets in exact mode stops at this many
# present categories
EXACT_MAX_CATEGORIES = 20


@dataclass(frozen=True)
class SearchConfig:
    depth: int = 2
    approx_points: int = 100
    cat_combinations: int = 100
    min_leaf_size: int | None = None
    exact_mode: bool = False
    gain_epsilon: float = 1e-12
    seed: int = 12345
    threads: int = 1

    def __post_init__(self):
        if self.depth < 0:
            raise BadConfig(f'depth must be >= 0, got {self.depth}')
        if self.approx_points < 2:
            raise BadConfig('approx_points must be >= 2')
        if self.cat_combinations < 1:
            raise BadConfig('cat_combinations must be >= 1')
        if self.min_leaf_size is not None and self.min_leaf_size < 1:
            raise BadConfig('min_leaf_size must be >= 1')
        if not self.gain_epsilon >= 0:
            raise BadConfig('gain_epsilon must be >= 0')
        if self.threads < 1:
            raise BadConfig('threads must be >= 1')

    def resolved_min_leaf(self, n_treatments: int) -> int:
        """Configured minimum leaf size, defaulting to max(5, 3 d)."""
        if self.min_leaf_size is not None:
            return self.min_leaf_size
        return max(5, 3 * n_treatments)

    def replace(self, **changes) -> 'SearchConfig':
        values = asdict(self)
        values.update(changes)
        return SearchConfig(**values)

    def snapshot(self, n_treatments: int) -> dict:
        """Settings that determine the result (thread count excluded)."""
        out = asdict(self)
        del out['threads']
        out['min_leaf_size'] = self.resolved_min_leaf(n_treatments)
        return out


@dataclass(frozen=True)
class SearchResult:
    tree: PolicyTree
    reward: float
    nodes_evaluated: int
    wall_time: float
    flags: tuple[str, ...] = field(default=())

    @property
    def mean_reward(self) -> float:
        return self.tree.metadata['welfare_mean']


def best_single_treatment(scores) -> tuple[int, float]:
    """Treatment with the largest column sum (lowest index on ties)."""
    sums = np.asarray(scores, dtype=np.float64).sum(axis=0)
    j = int(np.argmax(sums))
    return j, float(sums[j])


def threshold_budget(level_from_bottom: int, approx_points: int) -> int:
    return max(2, approx_points // 2 ** (level_from_bottom - 1))


def category_budget(level_from_bottom: int, cat_combinations: int) -> int:
    return max(1, cat_combinations // 2 ** (level_from_bottom - 1))


def candidate_thresholds(values, level_from_bottom: int,
                         config: SearchConfig) -> np.ndarray:
    """Split thresholds for one numeric feature at one tree level.

    Thresholds are midpoints between adjacent distinct values. When there are
    more gaps than the level's budget, gaps at equally spaced ranks among the
    sorted distinct values are kept. All-equal values give an empty array.
    """
    if level_from_bottom < 1:
        raise BadConfig('level_from_bottom must be >= 1')
    uniq = np.unique(np.asarray(values, dtype=np.float64))
    if len(uniq) < 2:
        return np.empty(0)
    k = -1 if config.exact_mode else threshold_budget(level_from_bottom,
                                                      config.approx_points)
    gaps = np.nonzero(_kernels.select_gaps(len(uniq) - 1, k))[0]
    return _midpoints(uniq[gaps], uniq[gaps + 1])


def _midpoints(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    mid = a + 0.5 * (b - a)
    return np.where(mid >= b, a, mid)


def _lex_codes(m: int) -> list[int]:
    """Bit codes of every proper subset of m items (the full set excluded),
    in lexicographic order of the sorted member lists."""
    full = (1 << m) - 1
    out = []

    # preorder walk: a set comes right before its extensions
    def visit(prefix, start):
        out.append(prefix)
        for b in range(start, m):
            visit(prefix | (1 << b), b + 1)

    visit(0, 0)
    return [c for c in out if c != full]


def _lex_key(code: int) -> tuple[int, ...]:
    return tuple(b for b in range(code.bit_length()) if code >> b & 1)


@lru_cache(maxsize=4096)
def category_codes(n_present: int, budget: int, exact: bool, seed: int,
                   feature_index: int, level_from_bottom: int) -> np.ndarray:
    """Candidate category subsets for a node with ``n_present`` categories.

    A code's bit ``b`` puts the ``(b+1)``-th present category on the left;
    the first present category is always on the left, which removes the
    mirror image of every split. Codes are in lexicographic order of the
    resulting category sets.
    """
    m = n_present - 1
    total = (1 << m) - 1
    if total <= budget or (exact and n_present <= EXACT_MAX_CATEGORIES):
        codes = _lex_codes(m)
    else:
        rng = np.random.default_rng([seed, feature_index, level_from_bottom,
                                     n_present])
        picked: set[int] = set()
        while len(picked) < budget:
            draw = rng.integers(0, total, size=budget - len(picked),
                                dtype=np.int64)
            picked.update(int(v) for v in draw)
        codes = sorted(picked, key=_lex_key)
    arr = np.array(codes, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def candidate_category_splits(feature: FeatureSpec, present_categories,
                              config: SearchConfig, level_from_bottom: int = 1,
                              feature_index: int = 0) -> list[SplitRule]:
    """Category-set split rules for one categorical feature at one level.

    All subsets are enumerated (up to left/right mirroring) when they fit the
    level's budget, or in exact mode for up to 20 present categories;
    otherwise the budget is filled with distinct subsets sampled uniformly
    from a generator seeded by the config seed, feature and level.
    """
    if feature.kind is not FeatureKind.CATEGORICAL:
        raise BadConfig(f'{feature.name!r} is not categorical')
    present = sorted(int(c) for c in set(present_categories))
    if len(present) < 2:
        return []
    codes = category_codes(len(present),
                           category_budget(level_from_bottom,
                                           config.cat_combinations),
                           config.exact_mode, config.seed, feature_index,
                           level_from_bottom)
    rules = []
    for code in codes:
        left = [present[0]] + [present[b + 1] for b in range(len(present) - 1)
                               if code >> b & 1]
        rules.append(SplitRule(feature_index, left_categories=frozenset(left)))
    return rules


def _mask_to_set(mask: int) -> frozenset[int]:
    return frozenset(b for b in range(64) if mask >> b & 1)


class _CategoryTables:
    """Flat candidate-code tables for the compiled bottom level.

    ``codes[off[f, c]: off[f, c] + length[f, c]]`` are the codes for
    categorical feature ``f`` at a node where ``c`` categories are present.
    """

    def __init__(self, kinds, max_present, config):
        p = len(kinds)
        slots = _kernels.MAX_CAT_SLOTS + 1
        self.off = np.zeros((p, slots), np.int64)
        self.length = np.zeros((p, slots), np.int64)
        chunks, pos = [], 0
        budget = category_budget(1, config.cat_combinations)
        for f, kind in enumerate(kinds):
            if kind != _kernels.KIND_CATEGORICAL:
                continue
            for c in range(2, max_present[f] + 1):
                codes = category_codes(c, budget, config.exact_mode,
                                       config.seed, f, 1)
                self.off[f, c] = pos
                self.length[f, c] = len(codes)
                chunks.append(codes)
                pos += len(codes)
        self.codes = (np.concatenate(chunks) if chunks
                      else np.zeros(1, np.int64))


# Lightweight node records used during search, turned into Leaf/Split at the
# end:  ('L', treatment, n_rows)  or  ('S', rule, left, right)

class _Searcher:
    def __init__(self, X, S, kinds, config, min_leaf, deadline=None):
        self.X = X
        self.S = S
        self.kinds = kinds
        self.config = config
        self.min_leaf = min_leaf
        self.deadline = deadline
        n = X.shape[0]
        scale = float(np.max(np.abs(S))) if S.size else 0.0
        self.tol = 1e-12 * n * scale
        max_present = [len(np.unique(X[:, f])) if k == _kernels.KIND_CATEGORICAL
                       else 0 for f, k in enumerate(kinds)]
        self.tables = _CategoryTables(kinds, max_present, config)
        self._local = threading.local()

    def _mark(self) -> np.ndarray:
        buf = getattr(self._local, 'mark', None)
        if buf is None:
            buf = np.zeros(self.X.shape[0], dtype=bool)
            self._local.mark = buf
        return buf

    def root_orders(self) -> np.ndarray:
        return np.stack([np.argsort(self.X[:, f], kind='stable')
                         for f in range(self.X.shape[1])]).astype(np.int64)

    def split_threshold(self, reward_leaf: float) -> float:
        return reward_leaf + max(
            self.config.gain_epsilon * (1.0 + abs(reward_leaf)), self.tol)

    def leaf(self, orders):
        total = _kernels.node_totals(self.S, orders[0])
        j = int(np.argmax(total))
        return float(total[j]), ('L', j, orders.shape[1])

    def partition(self, orders, left_rows):
        mark = self._mark()
        mark[left_rows] = True
        sel = mark[orders]
        mark[left_rows] = False
        p, m = orders.shape
        nl = len(left_rows)
        return orders[sel].reshape(p, nl), orders[~sel].reshape(p, m - nl)

    def candidates(self, orders, level):
        """Yield ``(rule, left_rows)`` in tie-break order."""
        cfg = self.config
        m = orders.shape[1]
        k = -1 if cfg.exact_mode else threshold_budget(level, cfg.approx_points)
        budget = category_budget(level, cfg.cat_combinations)
        for f, kind in enumerate(self.kinds):
            o = orders[f]
            v = self.X[o, f]
            if kind != _kernels.KIND_CATEGORICAL:
                gaps = np.nonzero(v[1:] > v[:-1])[0]
                if len(gaps) == 0:
                    continue
                gaps = gaps[_kernels.select_gaps(len(gaps), k)]
                n_left = gaps + 1
                ok = (n_left >= self.min_leaf) & (m - n_left >= self.min_leaf)
                gaps, n_left = gaps[ok], n_left[ok]
                thr = _midpoints(v[gaps], v[gaps + 1])
                for t, nl in zip(thr, n_left):
                    yield SplitRule(f, threshold=float(t)), o[:nl]
            else:
                cats = v.astype(np.int64)
                present = np.unique(cats)
                c = len(present)
                if c < 2:
                    continue
                codes = category_codes(c, budget, cfg.exact_mode, cfg.seed, f,
                                       level)
                lookup = np.zeros(_kernels.MAX_CAT_SLOTS, dtype=bool)
                for code in codes:
                    members = [present[0]] + [present[b + 1] for b in range(c - 1)
                                              if code >> b & 1]
                    lookup[:] = False
                    lookup[members] = True
                    is_left = lookup[cats]
                    nl = int(is_left.sum())
                    if nl < self.min_leaf or m - nl < self.min_leaf:
                        continue
                    yield (SplitRule(f, left_categories=frozenset(
                        int(x) for x in members)), o[is_left])

    def solve_stump(self, orders):
        cfg = self.config
        k = -1 if cfg.exact_mode else threshold_budget(1, cfg.approx_points)
        (leaf_reward, leaf_treat, best, f, thr, mask, lt, rt, nl,
         evaluated) = _kernels.best_stump(
            self.X, self.S, orders, self.kinds, k, self.min_leaf, self.tol,
            self.tables.codes, self.tables.off, self.tables.length)
        m = orders.shape[1]
        leaf = ('L', int(leaf_treat), m)
        if f < 0 or best <= self.split_threshold(leaf_reward):
            return float(leaf_reward), leaf, int(evaluated), f < 0
        if self.kinds[f] == _kernels.KIND_CATEGORICAL:
            rule = SplitRule(int(f), left_categories=_mask_to_set(int(mask)))
        else:
            rule = SplitRule(int(f), threshold=float(thr))
        node = ('S', rule, ('L', int(lt), int(nl)), ('L', int(rt), m - int(nl)))
        return float(best), node, int(evaluated), False

    def evaluate(self, orders, rule_rows, level):
        """Reward and subtree of one candidate split."""
        rule, left_rows = rule_rows
        lo, ro = self.partition(orders, left_rows)
        rl, nl_, el = self.solve(lo, level - 1)
        rr, nr_, er = self.solve(ro, level - 1)
        return rl + rr, ('S', rule, nl_, nr_), el + er + 1

    def solve(self, orders, level):
        """Returns (reward, node record, candidates evaluated)."""
        m = orders.shape[1]
        if level == 0 or m < 2 * self.min_leaf:
            reward, node = self.leaf(orders)
            return reward, node, 0
        if level == 1:
            reward, node, evaluated, _ = self.solve_stump(orders)
            return reward, node, evaluated
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise SearchTimeout('search exceeded its time limit')
        leaf_reward, leaf = self.leaf(orders)
        best, best_node, evaluated = -np.inf, None, 0
        for cand in self.candidates(orders, level):
            reward, node, count = self.evaluate(orders, cand, level)
            evaluated += count
            if reward > best + self.tol:
                best, best_node = reward, node
        if best_node is None or best <= self.split_threshold(leaf_reward):
            return leaf_reward, leaf, evaluated
        return best, best_node, evaluated

    def solve_root(self, orders, level, threads):
        """Like :meth:`solve`, with root candidates spread over threads and
        reduced in candidate order."""
        m = orders.shape[1]
        if level == 0 or m < 2 * self.min_leaf:
            reward, node = self.leaf(orders)
            return reward, node, 0, level > 0
        if level == 1:
            return self.solve_stump(orders)
        leaf_reward, leaf = self.leaf(orders)
        cands = list(self.candidates(orders, level))
        if threads > 1 and len(cands) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(
                    lambda c: self.evaluate(orders, c, level), cands))
        else:
            results = [self.evaluate(orders, c, level) for c in cands]
        best, best_node, evaluated = -np.inf, None, 0
        for reward, node, count in results:
            evaluated += count
            if reward > best + self.tol:
                best, best_node = reward, node
        if best_node is None or best <= self.split_threshold(leaf_reward):
            return leaf_reward, leaf, evaluated, best_node is None
        return best, best_node, evaluated, False


def _build(record, n_total):
    if record[0] == 'L':
        _, treat, count = record
        return Leaf(treat, count, count / n_total)
    _, rule, left, right = record
    return Split(rule, _build(left, n_total), _build(right, n_total))


def kind_codes(specs) -> np.ndarray:
    return np.array([_KIND_CODE[s.kind] for s in specs], dtype=np.int64)


def seen_categories(data: PolicyData) -> dict[str, list[int]]:
    return {s.name: sorted(int(v) for v in np.unique(data.features[:, k]))
            for k, s in enumerate(data.specs)
            if s.kind is FeatureKind.CATEGORICAL}


def finalize(tree: PolicyTree, data: PolicyData) -> tuple[PolicyTree, float]:
    """Recompute the training welfare by routing the rows and store it in the
    tree metadata."""
    idx, _ = leaf_index(tree, data.features)
    # column sums per leaf, so a single leaf gives exactly S.sum(axis=0)[j]
    reward = 0.0
    for k, leaf in enumerate(tree.leaves()):
        rows = idx == k
        if rows.any():
            reward += float(data.scores[rows].sum(axis=0)[leaf.treatment])
    meta = dict(tree.metadata)
    meta['welfare_total'] = reward
    meta['welfare_mean'] = reward / data.n
    meta['n_train'] = data.n
    return tree.replace(metadata=meta), reward


def search(data: PolicyData, config: SearchConfig = SearchConfig(), *,
           time_limit: float | None = None) -> SearchResult:
    """Find the policy tree of depth ``config.depth`` with the highest total
    score on ``data``.

    Parameters
    ----------
    data : PolicyData
        Training rows. Scores may already have treatment costs subtracted.
    config : SearchConfig
    time_limit : float, optional
        Seconds after which :class:`SearchTimeout` is raised.

    Returns
    -------
    SearchResult
        ``reward`` is the sum over rows of the score at the assigned
        treatment, recomputed from the returned tree.
    """
    start = time.perf_counter()
    min_leaf = config.resolved_min_leaf(data.d)
    if data.n < min_leaf:
        raise TooFewRows(f'{data.n} rows is below the minimum leaf size '
                         f'{min_leaf}')
    deadline = None if time_limit is None else start + time_limit
    searcher = _Searcher(np.ascontiguousarray(data.features),
                         np.ascontiguousarray(data.scores),
                         kind_codes(data.specs), config, min_leaf, deadline)
    _, record, evaluated, unsplittable = searcher.solve_root(
        searcher.root_orders(), config.depth, config.threads)
    root = _build(record, data.n)
    meta = {'config': config.snapshot(data.d),
            'stages': str(config.depth),
            'seen_categories': seen_categories(data)}
    tree = PolicyTree(root, data.specs, data.treatment_labels, config.depth,
                      meta)
    tree, reward = finalize(tree, data)
    flags = ('no_splittable_feature',) if unsplittable else ()
    return SearchResult(tree, reward, evaluated, time.perf_counter() - start,
                        flags)
