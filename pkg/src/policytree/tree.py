"""Policy trees: representation, routing, JSON, rule text and DOT export."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .data import FeatureKind, FeatureSpec, PolicyData
from .errors import MalformedTree, SchemaVersionUnsupported, SpecMismatch

FORMAT_VERSION = 1


@dataclass(frozen=True)
class SplitRule:
    """``x <= threshold`` goes left for numeric features; for categorical
    features, membership in ``left_categories`` goes left."""

    feature_index: int
    threshold: float | None = None
    left_categories: frozenset[int] | None = None

    def __post_init__(self):
        if (self.threshold is None) == (self.left_categories is None):
            raise MalformedTree('a split rule needs exactly one of threshold '
                                'or left_categories')
        if self.left_categories is not None:
            object.__setattr__(self, 'left_categories',
                               frozenset(int(c) for c in self.left_categories))
        else:
            object.__setattr__(self, 'threshold', float(self.threshold))

    @property
    def is_categorical(self) -> bool:
        return self.left_categories is not None

    def goes_left(self, column: np.ndarray) -> np.ndarray:
        if self.left_categories is None:
            return column <= self.threshold
        return np.isin(column.astype(np.int64), sorted(self.left_categories))


@dataclass(frozen=True)
class Leaf:
    treatment: int
    n_train: int = 0
    train_share: float = 0.0


@dataclass(frozen=True)
class Split:
    rule: SplitRule
    left: 'Node'
    right: 'Node'


Node = Union[Leaf, Split]


def node_depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(node_depth(node.left), node_depth(node.right))


def iter_leaves(node: Node, path=()) -> Iterator[tuple[tuple, Leaf]]:
    """Yield ``(path, leaf)`` left to right; ``path`` holds
    ``(rule, went_left)`` pairs from the root."""
    if isinstance(node, Leaf):
        yield path, node
    else:
        yield from iter_leaves(node.left, path + ((node.rule, True),))
        yield from iter_leaves(node.right, path + ((node.rule, False),))


@dataclass(frozen=True)
class PolicyTree:
    root: Node
    specs: tuple[FeatureSpec, ...]
    treatment_labels: tuple[str, ...]
    depth: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'specs', tuple(self.specs))
        object.__setattr__(self, 'treatment_labels',
                           tuple(self.treatment_labels))
        if self.depth < node_depth(self.root):
            raise MalformedTree(f'tree is deeper than its declared depth '
                                f'{self.depth}')
        d = len(self.treatment_labels)
        for path, leaf in iter_leaves(self.root):
            if not 0 <= leaf.treatment < d:
                raise MalformedTree(f'leaf treatment {leaf.treatment} out of '
                                    f'range for {d} treatments')
        self._check_rules(self.root)

    def _check_rules(self, node):
        if isinstance(node, Leaf):
            return
        rule = node.rule
        if not 0 <= rule.feature_index < len(self.specs):
            raise MalformedTree(f'feature index {rule.feature_index} out of '
                                'range')
        spec = self.specs[rule.feature_index]
        if rule.is_categorical:
            if spec.kind is not FeatureKind.CATEGORICAL:
                raise MalformedTree(f'category split on {spec.kind.value} '
                                    f'feature {spec.name!r}')
            cats = rule.left_categories
            if (not cats or len(cats) >= len(spec.categories)
                    or min(cats) < 0 or max(cats) >= len(spec.categories)):
                raise MalformedTree(f'bad category set {sorted(cats)} for '
                                    f'{spec.name!r}')
        elif spec.kind is FeatureKind.CATEGORICAL:
            raise MalformedTree(f'threshold split on categorical feature '
                                f'{spec.name!r}')
        self._check_rules(node.left)
        self._check_rules(node.right)

    @property
    def d(self) -> int:
        return len(self.treatment_labels)

    def leaves(self) -> list[Leaf]:
        return [leaf for _, leaf in iter_leaves(self.root)]

    def n_leaves(self) -> int:
        return len(self.leaves())

    def replace(self, **changes) -> 'PolicyTree':
        values = dict(root=self.root, specs=self.specs,
                      treatment_labels=self.treatment_labels,
                      depth=self.depth, metadata=dict(self.metadata))
        values.update(changes)
        return PolicyTree(**values)


def check_specs(tree: PolicyTree, data: PolicyData) -> None:
    """Raise :class:`SpecMismatch` unless ``data`` can be routed by ``tree``.

    Names and kinds must agree; the data's category list must start with the
    training categories (extra labels are unseen categories).
    """
    if len(tree.specs) != data.p:
        raise SpecMismatch(f'tree uses {len(tree.specs)} features, data has '
                           f'{data.p}')
    for ts, ds in zip(tree.specs, data.specs):
        if ts.name != ds.name or ts.kind is not ds.kind:
            raise SpecMismatch(f'feature {ds.name!r} ({ds.kind.value}) does '
                               f'not match {ts.name!r} ({ts.kind.value})')
        if ds.categories[:len(ts.categories)] != ts.categories:
            raise SpecMismatch(f'categories of {ds.name!r} do not match the '
                               'training categories')
    if data.d != tree.d:
        raise SpecMismatch(f'tree has {tree.d} treatments, data has {data.d}')


def _seen_categories(tree: PolicyTree, k: int) -> set[int]:
    seen = tree.metadata.get('seen_categories', {})
    spec = tree.specs[k]
    if spec.name in seen:
        return set(seen[spec.name])
    return set(range(len(spec.categories)))


def leaf_index(tree: PolicyTree, features: np.ndarray,
               ) -> tuple[np.ndarray, int]:
    """Number of the leaf (left to right) each row reaches, and the count of
    routing decisions taken on a category unseen in training."""
    n = features.shape[0]
    out = np.empty(n, dtype=np.int64)
    unseen = 0
    counter = iter(range(10 ** 9))
    stack = [(tree.root, np.arange(n))]
    # depth-first, left child first, so leaves are numbered left to right
    while stack:
        node, rows = stack.pop()
        if isinstance(node, Leaf):
            out[rows] = next(counter)
            continue
        col = features[rows, node.rule.feature_index]
        left = node.rule.goes_left(col)
        if node.rule.is_categorical:
            seen = _seen_categories(tree, node.rule.feature_index)
            unseen += int(np.sum(~np.isin(col.astype(np.int64),
                                          sorted(seen))))
        stack.append((node.right, rows[~left]))
        stack.append((node.left, rows[left]))
    return out, unseen


def assign(tree: PolicyTree, data: PolicyData, *, return_unseen=False):
    """Treatment index for every row of ``data``.

    Rows whose category was not seen in training go to the right ("not in")
    branch; with ``return_unseen=True`` the number of such routing events is
    returned as well.
    """
    check_specs(tree, data)
    idx, unseen = leaf_index(tree, data.features)
    treatments = np.array([leaf.treatment for leaf in tree.leaves()],
                          dtype=np.int64)
    result = treatments[idx]
    if return_unseen:
        return result, unseen
    return result


def tree_welfare(tree: PolicyTree, data: PolicyData) -> float:
    """Sum of scores at the assigned treatments."""
    a = assign(tree, data)
    return float(np.sum(data.scores[np.arange(data.n), a]))


# ---------------------------------------------------------------- JSON

def _node_to_obj(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {'treatment': node.treatment, 'n_train': node.n_train,
                'train_share': node.train_share}
    rule = node.rule
    if rule.is_categorical:
        robj = {'feature': rule.feature_index,
                'left_categories': sorted(rule.left_categories)}
    else:
        robj = {'feature': rule.feature_index,
                'threshold': format(rule.threshold, '.17g')}
    return {'rule': robj, 'left': _node_to_obj(node.left),
            'right': _node_to_obj(node.right)}


def _node_from_obj(obj) -> Node:
    if not isinstance(obj, dict):
        raise MalformedTree(f'node must be an object, got {type(obj).__name__}')
    has_rule, has_treat = 'rule' in obj, 'treatment' in obj
    if has_rule and has_treat:
        raise MalformedTree('node has both a rule and a treatment')
    if not (has_rule or has_treat):
        raise MalformedTree('node has neither a rule nor a treatment')
    try:
        if has_treat:
            return Leaf(int(obj['treatment']), int(obj.get('n_train', 0)),
                        float(obj.get('train_share', 0.0)))
        robj = obj['rule']
        if 'left_categories' in robj:
            rule = SplitRule(int(robj['feature']),
                             left_categories=frozenset(robj['left_categories']))
        else:
            rule = SplitRule(int(robj['feature']),
                             threshold=float(robj['threshold']))
        return Split(rule, _node_from_obj(obj['left']),
                     _node_from_obj(obj['right']))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedTree):
            raise
        raise MalformedTree(f'bad node: {exc}') from None


def to_json(tree: PolicyTree) -> str:
    obj = {'format_version': FORMAT_VERSION,
           'depth': tree.depth,
           'treatment_labels': list(tree.treatment_labels),
           'features': [s.to_dict() for s in tree.specs],
           'metadata': tree.metadata,
           'tree': _node_to_obj(tree.root)}
    return json.dumps(obj, indent=2, ensure_ascii=False) + '\n'


def from_json(text: str) -> PolicyTree:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedTree(f'invalid JSON: {exc}') from None
    if not isinstance(obj, dict):
        raise MalformedTree('top level must be an object')
    version = obj.get('format_version')
    if version != FORMAT_VERSION:
        raise SchemaVersionUnsupported(f'format_version {version!r} is not '
                                       f'supported (expected {FORMAT_VERSION})')
    try:
        specs = tuple(FeatureSpec.from_dict(f) for f in obj['features'])
        return PolicyTree(root=_node_from_obj(obj['tree']), specs=specs,
                          treatment_labels=tuple(obj['treatment_labels']),
                          depth=int(obj['depth']),
                          metadata=dict(obj.get('metadata', {})))
    except KeyError as exc:
        raise MalformedTree(f'missing key {exc}') from None


def save_tree(tree: PolicyTree, path) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(to_json(tree))


def load_tree(path) -> PolicyTree:
    with open(path, encoding='utf-8') as fh:
        return from_json(fh.read())


# ------------------------------------------------------------- rendering

def format_threshold(value: float) -> str:
    """Integers print bare, other values with at least three decimals and as
    many more as needed to read back the exact float."""
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    for digits in range(3, 18):
        text = f'{value:.{digits}f}'
        if float(text) == value:
            return text
    return repr(value)


def condition_text(rule: SplitRule, went_left: bool, spec: FeatureSpec) -> str:
    if rule.is_categorical:
        labels = ' '.join(spec.categories[c] for c in sorted(rule.left_categories))
        return f'{spec.name} {"in" if went_left else "not in"}: {labels}'
    op = '≤' if went_left else '>'
    return f'{spec.name} {op} {format_threshold(rule.threshold)}'


def render_rules(tree: PolicyTree, data: PolicyData | None = None) -> str:
    """One line per leaf, left to right: the conditions on the path from the
    root, then the assigned treatment label. With ``data``, the share of its
    rows reaching the leaf is appended."""
    shares = None
    if data is not None:
        check_specs(tree, data)
        idx, _ = leaf_index(tree, data.features)
        shares = np.bincount(idx, minlength=tree.n_leaves()) / data.n
    lines = []
    for k, (path, leaf) in enumerate(iter_leaves(tree.root)):
        conds = ', '.join(condition_text(rule, left, tree.specs[rule.feature_index])
                          for rule, left in path) or '(all)'
        line = f'{conds} → {tree.treatment_labels[leaf.treatment]}'
        if shares is not None:
            line += f' ({100 * shares[k]:.2f}%)'
        lines.append(line)
    return '\n'.join(lines) + '\n'


def _dot_escape(text: str) -> str:
    return text.replace('\\', '\\\\').replace('"', '\\"')


def to_dot(tree: PolicyTree) -> str:
    lines = ['digraph policy_tree {', '  node [fontname="Helvetica"];']
    counter = iter(range(10 ** 9))

    def walk(node) -> str:
        name = f'n{next(counter)}'
        if isinstance(node, Leaf):
            label = (_dot_escape(tree.treatment_labels[node.treatment])
                     + f'\\n{100 * node.train_share:.1f}%')
            lines.append(f'  {name} [label="{label}", shape=ellipse];')
            return name
        spec = tree.specs[node.rule.feature_index]
        label = _dot_escape(condition_text(node.rule, True, spec))
        lines.append(f'  {name} [label="{label}", shape=box];')
        left = walk(node.left)
        right = walk(node.right)
        lines.append(f'  {name} -> {left} [label="yes"];')
        lines.append(f'  {name} -> {right} [label="no"];')
        return name

    walk(tree.root)
    lines.append('}')
    return '\n'.join(lines) + '\n'
