"""Command-line interface: split, train, assign, report, export, simulate.

Exit codes: 0 success (warnings go to stderr), 2 invalid input or usage,
3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .constraints import ShareConstraint, adjust_costs_for_shares, apply_costs
from .data import (FeatureKind, load_csv, load_schema, save_schema,
                   schema_for, split_data, write_csv)
from .errors import BadConfig, PolicyTreeError
from .evaluation import (allocate_best_score, allocate_observed,
                         allocate_random, allocate_tree, evaluate)
from .search import SearchConfig
from .sequential import search_sequential
from .synthdata import GeneratorSpec, generate
from .tree import (assign, load_tree, render_rules, save_tree, to_dot,
                   to_json)

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f'error: Usage: {message}', file=sys.stderr)
        sys.exit(EXIT_INVALID)


def _warn(msg: str) -> None:
    print(f'warning: {msg}', file=sys.stderr)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(',') if t.strip()]
    except ValueError:
        raise BadConfig(f'expected comma-separated numbers, got {text!r}'
                        ) from None


def _ints(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(t) for t in text.replace('+', ',').split(',') if t.strip()]
    except ValueError:
        raise BadConfig(f'expected comma-separated integers, got {text!r}'
                        ) from None


def _tree_categories(tree):
    return {s.name: s.categories for s in tree.specs
            if s.kind is FeatureKind.CATEGORICAL}


def cmd_split(args) -> int:
    schema = load_schema(args.schema)
    data = load_csv(args.data, schema)
    if data.dropped_rows:
        _warn(f'dropped {data.dropped_rows} incomplete rows')
    split = split_data(data, _floats(args.proportions), seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.data).stem
    if schema.id is None:
        schema = schema_for(data, schema.scores, schema.treatment,
                            schema.outcome, 'id')
        save_schema(schema, out / f'{stem}_schema.json')
    for name, part in zip(('train_forest', 'train_policy', 'predict'),
                          split.parts):
        path = out / f'{stem}_{name}.csv'
        write_csv(part, path, schema)
        print(f'{path}\t{part.n}')
    return EXIT_OK


def cmd_train(args) -> int:
    data = load_csv(args.data, load_schema(args.schema))
    if data.dropped_rows:
        _warn(f'dropped {data.dropped_rows} incomplete rows')
    config = SearchConfig(depth=args.depth, approx_points=args.approx,
                          cat_combinations=args.cat_combinations,
                          min_leaf_size=args.min_leaf, exact_mode=args.exact,
                          seed=args.seed, threads=args.threads)
    train = data
    cost_meta = None
    if args.max_shares is not None:
        constraint = ShareConstraint(tuple(_floats(args.max_shares)))
        if not constraint.unconstrained:
            costs = adjust_costs_for_shares(data, constraint)
            if not costs.converged:
                _warn(f'cost calibration did not converge after '
                      f'{costs.iterations_used} iterations')
            train = data.with_scores(apply_costs(data.scores, costs))
            cost_meta = {'max_shares': list(constraint.max_shares),
                         'costs': [float(c) for c in costs.costs],
                         'iterations': costs.iterations_used,
                         'converged': costs.converged}
    result = search_sequential(train, args.depth, _ints(args.extra_depths),
                               config)
    tree = result.tree
    if cost_meta is not None:
        meta = dict(tree.metadata)
        meta['constraint'] = cost_meta
        tree = tree.replace(metadata=meta)
    for flag in result.flags:
        _warn(flag.replace('_', ' '))
    save_tree(tree, args.out)
    original = float(np.sum(data.scores[np.arange(data.n),
                                        assign(tree, data)])) / data.n
    print(f'stages: {tree.metadata["stages"]}')
    print(f'leaves: {tree.n_leaves()}')
    print(f'training welfare (mean): {original:.6g}')
    print(f'candidate nodes evaluated: {result.nodes_evaluated}')
    print(f'wall time (s): {result.wall_time:.3f}')
    print(render_rules(tree, data), end='')
    return EXIT_OK


def cmd_assign(args) -> int:
    tree = load_tree(args.tree)
    data = load_csv(args.data, load_schema(args.schema),
                    categories=_tree_categories(tree))
    if data.dropped_rows:
        _warn(f'dropped {data.dropped_rows} incomplete rows')
    treat, unseen = assign(tree, data, return_unseen=True)
    if unseen:
        _warn(f'{unseen} routing decisions used categories unseen in '
              'training (sent to the "not in" branch)')
    fh = open(args.out, 'w', newline='', encoding='utf-8') if args.out \
        else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(['id', 'treatment'])
        for rid, t in zip(data.row_ids, treat):
            writer.writerow([rid, tree.treatment_labels[t]])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_report(args) -> int:
    trees = [load_tree(p) for p in args.tree or []]
    cats = {}
    for tree in trees:
        for name, c in _tree_categories(tree).items():
            if len(c) > len(cats.get(name, ())):
                cats[name] = c
    data = load_csv(args.data, load_schema(args.schema), categories=cats)
    if data.dropped_rows:
        _warn(f'dropped {data.dropped_rows} incomplete rows')
    allocations, notices = [], []
    observed = allocate_observed(data)
    if observed is None:
        notices.append('no observed treatment column; Observed row omitted')
        shares = np.full(data.d, 1.0 / data.d)
    else:
        allocations.append(observed)
        shares = np.bincount(observed.assignments, minlength=data.d) / data.n
    allocations.append(allocate_random(data.n, shares, args.seed))
    for path, tree in zip(args.tree or [], trees):
        allocations.append(allocate_tree(tree, data))
    if args.best_score:
        allocations.append(allocate_best_score(data.scores))
    report = evaluate(allocations, data.scores, data.treatment_labels,
                      notices)
    print(report.to_text(), end='')
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding='utf-8')
    return EXIT_OK


def cmd_export(args) -> int:
    tree = load_tree(args.tree)
    data = None
    if args.data:
        data = load_csv(args.data, load_schema(args.schema),
                        categories=_tree_categories(tree))
    if args.format == 'dot':
        text = to_dot(tree)
    elif args.format == 'json':
        text = to_json(tree)
    else:
        text = render_rules(tree, data)
    if args.out:
        Path(args.out).write_text(text, encoding='utf-8')
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = GeneratorSpec(n=args.n, d=args.d,
                         features=tuple(args.features.split(',')),
                         planted_depth=args.depth, signal=args.signal,
                         noise_sd=args.noise_sd, seed=args.seed)
    data, oracle = generate(spec)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    schema = schema_for(data)
    write_csv(data, f'{prefix}.csv', schema)
    # categorical labels are pinned so that splits keep the same numbering
    schema = dataclasses.replace(schema, categories={
        s.name: s.categories for s in data.specs
        if s.kind is FeatureKind.CATEGORICAL} or None)
    save_schema(schema, f'{prefix}_schema.json')
    save_tree(oracle, f'{prefix}_oracle.json')
    print(f'{prefix}.csv\t{data.n}')
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='policytree',
                     description='Optimal policy trees from policy scores.')
    sub = parser.add_subparsers(dest='command', required=True,
                                parser_class=_Parser)

    p = sub.add_parser('split', help='split a CSV into three parts')
    p.add_argument('--data', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--proportions', default='0.4,0.4,0.2')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out-dir', default='.')
    p.set_defaults(func=cmd_split)

    p = sub.add_parser('train', help='search a policy tree')
    p.add_argument('--data', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--depth', type=int, default=2)
    p.add_argument('--extra-depths', default='',
                   help='depths of sequential sub-trees, e.g. "1" or "1,1"')
    p.add_argument('--max-shares', help='comma-separated cap per treatment')
    p.add_argument('--min-leaf', type=int)
    p.add_argument('--approx', type=int, default=100)
    p.add_argument('--cat-combinations', type=int, default=100)
    p.add_argument('--exact', action='store_true')
    p.add_argument('--seed', type=int, default=12345)
    p.add_argument('--threads', type=int, default=1)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('assign', help='apply a tree to data')
    p.add_argument('--tree', required=True)
    p.add_argument('--data', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--out')
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser('report', help='welfare and treatment shares')
    p.add_argument('--data', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--tree', action='append')
    p.add_argument('--best-score', action='store_true')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--csv')
    p.set_defaults(func=cmd_report)

    p = sub.add_parser('export', help='render a tree as rules, DOT or JSON')
    p.add_argument('--tree', required=True)
    p.add_argument('--format', choices=('rules', 'dot', 'json'),
                   default='rules')
    p.add_argument('--data')
    p.add_argument('--schema')
    p.add_argument('--out')
    p.set_defaults(func=cmd_export)

    p = sub.add_parser('simulate', help='synthetic data with a planted tree')
    p.add_argument('--n', type=int, default=1000)
    p.add_argument('--d', type=int, default=2)
    p.add_argument('--features', default='continuous,ordered,categorical')
    p.add_argument('--depth', type=int, default=2)
    p.add_argument('--signal', type=float, default=1.0)
    p.add_argument('--noise-sd', type=float, default=0.5)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out-prefix', required=True)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, 'data', None) and args.command == 'export' \
            and not args.schema:
        print('error: Usage: --data needs --schema', file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except PolicyTreeError as exc:
        print(f'error: {exc.code}: {exc}', file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f'error: {type(exc).__name__}: {exc}', file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f'error: Internal: {type(exc).__name__}: {exc}',
              file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == '__main__':
    sys.exit(main())
