"""Tabular input: feature specs, policy-score data, CSV ingestion and splits."""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (BadProportions, EmptyAfterCleaning, MissingColumn,
                     NoTreatments, NonFiniteScore, SchemaError)

MAX_CATEGORIES = 63
MISSING_TOKENS = frozenset({'', 'na', 'nan', 'null', 'none'})


class FeatureKind(str, enum.Enum):
    CONTINUOUS = 'continuous'
    ORDERED = 'ordered'
    CATEGORICAL = 'categorical'

    @classmethod
    def parse(cls, text: str) -> 'FeatureKind':
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace('-', '_')
        aliases = {'continuous': cls.CONTINUOUS,
                   'ordered': cls.ORDERED,
                   'ordered_discrete': cls.ORDERED,
                   'ordereddiscrete': cls.ORDERED,
                   'categorical': cls.CATEGORICAL,
                   'unordered': cls.CATEGORICAL}
        try:
            return aliases[key]
        except KeyError:
            raise SchemaError(f'unknown feature kind {text!r}') from None

    @property
    def is_numeric(self) -> bool:
        return self is not FeatureKind.CATEGORICAL


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: FeatureKind
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'kind', FeatureKind.parse(self.kind))
        object.__setattr__(self, 'categories', tuple(self.categories))
        if self.kind is FeatureKind.CATEGORICAL:
            if len(self.categories) < 2:
                raise SchemaError(
                    f'categorical feature {self.name!r} needs at least 2 '
                    'categories')
            if len(self.categories) > MAX_CATEGORIES:
                raise SchemaError(
                    f'categorical feature {self.name!r} has '
                    f'{len(self.categories)} categories; at most '
                    f'{MAX_CATEGORIES} are supported')
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f'duplicate categories in {self.name!r}')
        elif self.categories:
            raise SchemaError(
                f'{self.kind.value} feature {self.name!r} cannot list '
                'categories')

    def to_dict(self) -> dict:
        out = {'name': self.name, 'kind': self.kind.value}
        if self.categories:
            out['categories'] = list(self.categories)
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> 'FeatureSpec':
        return cls(obj['name'], obj['kind'], tuple(obj.get('categories', ())))


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PolicyData:
    """Features, per-treatment policy scores and optional observed columns.

    ``features`` is an ``n x p`` float array. Categorical columns hold the
    category index into ``specs[k].categories``. ``scores[i, j]`` is the
    policy score of row ``i`` under treatment ``j``. Arrays are read-only.
    """

    features: np.ndarray
    scores: np.ndarray
    specs: tuple[FeatureSpec, ...]
    treatment_labels: tuple[str, ...]
    observed_treatment: np.ndarray | None = None
    observed_outcome: np.ndarray | None = None
    row_ids: tuple[str, ...] | None = None
    dropped_rows: int = field(default=0, compare=False)

    def __post_init__(self):
        feats = _frozen_array(self.features, np.float64)
        scores = _frozen_array(self.scores, np.float64)
        if feats.ndim != 2 or scores.ndim != 2:
            raise SchemaError('features and scores must be 2-d')
        n, p = feats.shape
        d = scores.shape[1]
        specs = tuple(self.specs)
        labels = tuple(str(lab) for lab in self.treatment_labels)
        if n < 1:
            raise EmptyAfterCleaning('no rows')
        if d < 2:
            raise NoTreatments(f'need at least 2 treatments, got {d}')
        if p < 1 or len(specs) != p:
            raise SchemaError(
                f'{len(specs)} feature specs for {p} feature columns')
        if scores.shape[0] != n:
            raise SchemaError('features and scores differ in row count')
        if len(labels) != d:
            raise SchemaError(f'{len(labels)} labels for {d} score columns')
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise SchemaError('feature names must be unique')
        if not np.all(np.isfinite(scores)):
            raise NonFiniteScore('all policy scores must be finite')
        if not np.all(np.isfinite(feats)):
            raise SchemaError('features contain missing or non-finite values')
        for k, spec in enumerate(specs):
            if spec.kind is FeatureKind.CATEGORICAL:
                col = feats[:, k]
                if (np.any(col != np.floor(col)) or np.any(col < 0)
                        or np.any(col >= len(spec.categories))):
                    raise SchemaError(
                        f'invalid category index in feature {spec.name!r}')
        object.__setattr__(self, 'features', feats)
        object.__setattr__(self, 'scores', scores)
        object.__setattr__(self, 'specs', specs)
        object.__setattr__(self, 'treatment_labels', labels)
        if self.observed_treatment is not None:
            obs = _frozen_array(self.observed_treatment, np.int64)
            if obs.shape != (n,) or np.any(obs < 0) or np.any(obs >= d):
                raise SchemaError('observed treatment out of range')
            object.__setattr__(self, 'observed_treatment', obs)
        if self.observed_outcome is not None:
            out = _frozen_array(self.observed_outcome, np.float64)
            if out.shape != (n,):
                raise SchemaError('observed outcome has wrong length')
            object.__setattr__(self, 'observed_outcome', out)
        if self.row_ids is None:
            ids = tuple(str(i) for i in range(n))
        else:
            ids = tuple(str(i) for i in self.row_ids)
            if len(ids) != n:
                raise SchemaError('row_ids has wrong length')
        object.__setattr__(self, 'row_ids', ids)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def d(self) -> int:
        return self.scores.shape[1]

    def subset(self, rows) -> 'PolicyData':
        rows = np.asarray(rows, dtype=np.int64)
        return PolicyData(
            features=self.features[rows],
            scores=self.scores[rows],
            specs=self.specs,
            treatment_labels=self.treatment_labels,
            observed_treatment=(None if self.observed_treatment is None
                                else self.observed_treatment[rows]),
            observed_outcome=(None if self.observed_outcome is None
                              else self.observed_outcome[rows]),
            row_ids=tuple(self.row_ids[i] for i in rows))

    def with_scores(self, scores) -> 'PolicyData':
        return PolicyData(self.features, scores, self.specs,
                          self.treatment_labels, self.observed_treatment,
                          self.observed_outcome, self.row_ids)

    def __eq__(self, other):
        if not isinstance(other, PolicyData):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and np.array_equal(a, b)

        return (same(self.features, other.features)
                and same(self.scores, other.scores)
                and self.specs == other.specs
                and self.treatment_labels == other.treatment_labels
                and same(self.observed_treatment, other.observed_treatment)
                and same(self.observed_outcome, other.observed_outcome)
                and self.row_ids == other.row_ids)

    __hash__ = None


@dataclass(frozen=True)
class Schema:
    """Column-role mapping for CSV files."""

    scores: tuple[str, ...]
    features: tuple[tuple[str, FeatureKind], ...]
    treatment: str | None = None
    outcome: str | None = None
    id: str | None = None
    treatment_labels: tuple[str, ...] | None = None
    categories: Mapping[str, tuple[str, ...]] | None = None

    @classmethod
    def from_dict(cls, obj: Mapping) -> 'Schema':
        if 'scores' not in obj or 'features' not in obj:
            raise SchemaError('schema needs "scores" and "features"')
        feats, cats = [], {}
        for name, kind in obj['features'].items():
            if isinstance(kind, Mapping):
                if 'categories' in kind:
                    cats[name] = tuple(str(c) for c in kind['categories'])
                kind = kind['kind']
            feats.append((name, FeatureKind.parse(kind)))
        labels = obj.get('treatment_labels')
        return cls(scores=tuple(obj['scores']),
                   features=tuple(feats),
                   treatment=obj.get('treatment'),
                   outcome=obj.get('outcome'),
                   id=obj.get('id'),
                   treatment_labels=None if labels is None else tuple(labels),
                   categories=cats or None)

    def to_dict(self) -> dict:
        feats = {}
        for name, kind in self.features:
            if self.categories and name in self.categories:
                feats[name] = {'kind': kind.value,
                               'categories': list(self.categories[name])}
            else:
                feats[name] = kind.value
        out = {'scores': list(self.scores), 'features': feats}
        for key in ('treatment', 'outcome', 'id'):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.treatment_labels is not None:
            out['treatment_labels'] = list(self.treatment_labels)
        return out

    @property
    def labels(self) -> tuple[str, ...]:
        return self.treatment_labels or self.scores


def load_schema(path) -> Schema:
    with open(path, encoding='utf-8') as fh:
        return Schema.from_dict(json.load(fh))


def save_schema(schema: Schema, path) -> None:
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write('\n')


def _parse_float(cell: str):
    text = cell.strip()
    if text.lower() in MISSING_TOKENS:
        return None
    try:
        return float(text)
    except ValueError:
        return None


def _parse_treatment(cell: str, labels: Sequence[str]):
    text = cell.strip()
    if text.lower() in MISSING_TOKENS:
        return None
    if text in labels:
        return labels.index(text)
    try:
        value = float(text)
    except ValueError:
        return None
    if value == int(value) and 0 <= int(value) < len(labels):
        return int(value)
    return None


def load_csv(path, schema: Schema | Mapping,
             categories: Mapping[str, Sequence[str]] | None = None
             ) -> PolicyData:
    """Read a CSV file into validated :class:`PolicyData`.

    Rows with a missing or unparseable cell in any mapped column are dropped;
    the count is stored in ``dropped_rows``. Categories of categorical
    features are numbered in order of first appearance, unless ``categories``
    (or the schema) fixes them; labels not listed there are appended after
    the known ones.
    """
    if not isinstance(schema, Schema):
        schema = Schema.from_dict(schema)
    if len(schema.scores) < 2:
        raise NoTreatments(
            f'schema maps {len(schema.scores)} score column(s); need >= 2')
    if not schema.features:
        raise SchemaError('schema maps no feature columns')
    known = dict(schema.categories or {})
    known.update(categories or {})
    labels = list(schema.labels)
    if len(labels) != len(schema.scores):
        raise SchemaError('treatment_labels and scores differ in length')

    with open(path, newline='', encoding='utf-8') as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyAfterCleaning(f'{path}: empty file') from None
        col = {name: k for k, name in enumerate(header)}
        wanted = list(schema.scores) + [n for n, _ in schema.features]
        wanted += [c for c in (schema.treatment, schema.outcome, schema.id)
                   if c is not None]
        for name in wanted:
            if name not in col:
                raise MissingColumn(f'column {name!r} not found in {path}')

        cat_maps = {name: {lab: k for k, lab in enumerate(known.get(name, ()))}
                    for name, kind in schema.features
                    if kind is FeatureKind.CATEGORICAL}
        feats, scores, treat, outcome, ids = [], [], [], [], []
        dropped = 0
        for line_no, row in enumerate(reader):
            if len(row) < len(header):
                dropped += 1
                continue
            score_row = [_parse_float(row[col[c]]) for c in schema.scores]
            if any(v is None for v in score_row):
                dropped += 1
                continue
            if not all(math.isfinite(v) for v in score_row):
                raise NonFiniteScore(
                    f'{path}: non-finite score in data row {line_no}')
            feat_row, ok = [], True
            for name, kind in schema.features:
                cell = row[col[name]].strip()
                if kind is FeatureKind.CATEGORICAL:
                    if cell.lower() in MISSING_TOKENS:
                        ok = False
                        break
                    # index assigned later, once the row is known to be kept
                    feat_row.append(cell)
                else:
                    value = _parse_float(cell)
                    if value is None or not math.isfinite(value):
                        ok = False
                        break
                    feat_row.append(value)
            if not ok:
                dropped += 1
                continue
            t_val = o_val = None
            if schema.treatment is not None:
                t_val = _parse_treatment(row[col[schema.treatment]], labels)
                if t_val is None:
                    dropped += 1
                    continue
            if schema.outcome is not None:
                o_val = _parse_float(row[col[schema.outcome]])
                if o_val is None or not math.isfinite(o_val):
                    dropped += 1
                    continue
            for k, (name, kind) in enumerate(schema.features):
                if kind is FeatureKind.CATEGORICAL:
                    mapping = cat_maps[name]
                    feat_row[k] = mapping.setdefault(feat_row[k], len(mapping))
            feats.append(feat_row)
            scores.append(score_row)
            treat.append(t_val)
            outcome.append(o_val)
            ids.append(row[col[schema.id]].strip() if schema.id is not None
                       else str(line_no))

    if not feats:
        raise EmptyAfterCleaning(f'{path}: no complete rows '
                                 f'({dropped} dropped)')
    specs = []
    for name, kind in schema.features:
        cats = ()
        if kind is FeatureKind.CATEGORICAL:
            cats = tuple(sorted(cat_maps[name], key=cat_maps[name].get))
        specs.append(FeatureSpec(name, kind, cats))
    return PolicyData(
        features=np.array(feats, dtype=np.float64),
        scores=np.array(scores, dtype=np.float64),
        specs=tuple(specs),
        treatment_labels=tuple(labels),
        observed_treatment=(np.array(treat, dtype=np.int64)
                            if schema.treatment is not None else None),
        observed_outcome=(np.array(outcome, dtype=np.float64)
                          if schema.outcome is not None else None),
        row_ids=tuple(ids),
        dropped_rows=dropped)


def schema_for(data: PolicyData, score_columns: Sequence[str] | None = None,
               treatment: str | None = None, outcome: str | None = None,
               id_column: str | None = 'id') -> Schema:
    """Build a schema that writes ``data`` back to CSV without loss."""
    if score_columns is None:
        score_columns = [f'score_{lab}' for lab in data.treatment_labels]
    if data.observed_treatment is not None and treatment is None:
        treatment = 'treatment'
    if data.observed_outcome is not None and outcome is None:
        outcome = 'outcome'
    return Schema(scores=tuple(score_columns),
                  features=tuple((s.name, s.kind) for s in data.specs),
                  treatment=treatment, outcome=outcome, id=id_column,
                  treatment_labels=tuple(data.treatment_labels))


def write_csv(data: PolicyData, path, schema: Schema | None = None) -> None:
    """Write ``data`` using the column names of ``schema``.

    Floats are written with ``repr`` so a subsequent :func:`load_csv` with the
    same schema reproduces ``data`` exactly.
    """
    if schema is None:
        schema = schema_for(data)
    header = []
    if schema.id is not None:
        header.append(schema.id)
    header += [name for name, _ in schema.features]
    header += list(schema.scores)
    if schema.treatment is not None:
        header.append(schema.treatment)
    if schema.outcome is not None:
        header.append(schema.outcome)
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for i in range(data.n):
            row = []
            if schema.id is not None:
                row.append(data.row_ids[i])
            for k, spec in enumerate(data.specs):
                value = data.features[i, k]
                if spec.kind is FeatureKind.CATEGORICAL:
                    row.append(spec.categories[int(value)])
                else:
                    row.append(repr(float(value)))
            row += [repr(float(v)) for v in data.scores[i]]
            if schema.treatment is not None:
                row.append(data.treatment_labels[
                    int(data.observed_treatment[i])])
            if schema.outcome is not None:
                row.append(repr(float(data.observed_outcome[i])))
            writer.writerow(row)


@dataclass(frozen=True)
class DataSplit:
    train_forest: PolicyData
    train_policy: PolicyData
    predict: PolicyData
    seed: int

    @property
    def parts(self) -> tuple[PolicyData, PolicyData, PolicyData]:
        return self.train_forest, self.train_policy, self.predict


def split_sizes(n: int, proportions: Sequence[float]) -> list[int]:
    """round(n*f) for every part but the last, which takes the remainder."""
    sizes = [int(math.floor(n * f + 0.5)) for f in proportions[:-1]]
    sizes.append(n - sum(sizes))
    return sizes


def split_data(data: PolicyData, proportions=(0.4, 0.4, 0.2),
               seed: int = 0) -> DataSplit:
    """Randomly partition rows into forest-training, policy-training and
    prediction parts (uniform, without replacement, seeded).

    Rows keep their original relative order within each part.
    """
    props = [float(f) for f in proportions]
    if len(props) != 3 or any(not f > 0 for f in props):
        raise BadProportions(f'need three positive fractions, got {props}')
    if abs(sum(props) - 1.0) > 1e-9:
        raise BadProportions(f'fractions sum to {sum(props)!r}, not 1')
    sizes = split_sizes(data.n, props)
    if min(sizes) < 1:
        raise BadProportions(f'split of {data.n} rows leaves an empty part '
                             f'(sizes {sizes})')
    perm = np.random.default_rng(seed).permutation(data.n)
    bounds = np.cumsum([0] + sizes)
    parts = [data.subset(np.sort(perm[bounds[k]:bounds[k + 1]]))
             for k in range(3)]
    return DataSplit(*parts, seed=seed)


def feature_kinds(specs: Sequence[FeatureSpec]) -> tuple[int, int]:
    """Number of ordered (continuous or discrete) and unordered features."""
    ordered = sum(1 for s in specs if s.kind.is_numeric)
    return ordered, len(specs) - ordered
