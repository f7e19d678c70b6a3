"""Optimal and sequentially optimal policy trees over policy-score matrices."""
from .constraints import (CostVector, ShareConstraint, adjust_costs_for_shares,
                          apply_costs)
from .data import (DataSplit, FeatureKind, FeatureSpec, PolicyData, Schema,
                   load_csv, load_schema, split_data, write_csv)
from .errors import PolicyTreeError, SearchTimeout
from .evaluation import (Allocation, EvaluationReport, allocate_best_score,
                         allocate_observed, allocate_random, allocate_tree,
                         evaluate)
from .search import SearchConfig, SearchResult, search
from .sequential import search_sequential
from .synthdata import GeneratorSpec, generate
from .tree import (Leaf, PolicyTree, Split, SplitRule, assign, from_json,
                   load_tree, render_rules, save_tree, to_dot, to_json)

__all__ = [
    'Allocation', 'CostVector', 'DataSplit', 'EvaluationReport',
    'FeatureKind', 'FeatureSpec', 'GeneratorSpec', 'Leaf', 'PolicyData',
    'PolicyTree', 'PolicyTreeError', 'Schema', 'SearchConfig',
    'SearchResult', 'SearchTimeout', 'ShareConstraint', 'Split',
    'SplitRule', 'adjust_costs_for_shares', 'allocate_best_score',
    'allocate_observed', 'allocate_random', 'allocate_tree', 'apply_costs',
    'assign', 'evaluate', 'from_json', 'generate', 'load_csv', 'load_schema',
    'load_tree', 'render_rules', 'save_tree', 'search', 'search_sequential',
    'split_data', 'to_dot', 'to_json', 'write_csv',
]
