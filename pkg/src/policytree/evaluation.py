"""Baseline allocations and welfare / treatment-share reports."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import PolicyData
from .errors import BadShares, LengthMismatch
from .tree import PolicyTree, assign


@dataclass(frozen=True)
class Allocation:
    policy_name: str
    assignments: np.ndarray
    source: str
    params: dict | None = None

    def __post_init__(self):
        arr = np.asarray(self.assignments, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, 'assignments', arr)


@dataclass(frozen=True)
class ReportRow:
    policy_name: str
    welfare_mean: float
    welfare_total: float
    treatment_shares: tuple[float, ...]
    n: int


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[ReportRow, ...]
    treatment_labels: tuple[str, ...]
    notices: tuple[str, ...] = ()

    def to_text(self, digits: int = 4) -> str:
        name_w = max([len('Policy')] + [len(r.policy_name) for r in self.rows])
        cols = ['Welfare'] + [f'{lab} (%)' for lab in self.treatment_labels]
        widths = [max(len(c), digits + 8) for c in cols]
        header = 'Policy'.ljust(name_w) + ''.join(
            '  ' + c.rjust(w) for c, w in zip(cols, widths))
        lines = [header, '-' * len(header)]
        for row in self.rows:
            vals = [f'{row.welfare_mean:.{digits}f}'] + [
                f'{100 * s:.2f}' for s in row.treatment_shares]
            lines.append(row.policy_name.ljust(name_w) + ''.join(
                '  ' + v.rjust(w) for v, w in zip(vals, widths)))
        lines += [f'note: {msg}' for msg in self.notices]
        return '\n'.join(lines) + '\n'

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(['policy', 'welfare_mean']
                        + [f'share_{j}' for j in range(len(self.treatment_labels))]
                        + ['n'])
        for row in self.rows:
            writer.writerow([row.policy_name, repr(row.welfare_mean)]
                            + [repr(s) for s in row.treatment_shares]
                            + [row.n])
        return buf.getvalue()


def allocate_best_score(scores, name: str = 'Best score') -> Allocation:
    """Row-wise argmax of the scores (lowest index on ties)."""
    scores = np.asarray(scores, dtype=np.float64)
    return Allocation(name, np.argmax(scores, axis=1), 'BestScore')


def allocate_random(n: int, shares: Sequence[float], seed: int,
                    name: str = 'Random') -> Allocation:
    """i.i.d. draws from the categorical distribution ``shares``."""
    shares = np.asarray(shares, dtype=np.float64)
    if shares.ndim != 1 or np.any(shares < 0) or abs(shares.sum() - 1) > 1e-9:
        raise BadShares(f'shares must be non-negative and sum to 1: {shares}')
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(shares), size=n, p=shares / shares.sum())
    return Allocation(name, draws, 'Random',
                      {'seed': seed, 'shares': shares.tolist()})


def allocate_observed(data: PolicyData, name: str = 'Observed'
                      ) -> Allocation | None:
    if data.observed_treatment is None:
        return None
    return Allocation(name, data.observed_treatment, 'Observed')


def allocate_tree(tree: PolicyTree, data: PolicyData,
                  name: str | None = None) -> Allocation:
    if name is None:
        name = f'Policy tree depth-{tree.metadata.get("stages", tree.depth)}'
    return Allocation(name, assign(tree, data), 'Tree')


def evaluate(allocations: Sequence[Allocation], scores,
             labels: Sequence[str], notices: Sequence[str] = ()
             ) -> EvaluationReport:
    """Mean and total welfare plus treatment shares of each allocation,
    in the order given. Welfare uses ``scores`` as passed, so pass the
    original (cost-free) scores to report outcome units."""
    scores = np.asarray(scores, dtype=np.float64)
    n, d = scores.shape
    if len(labels) != d:
        raise LengthMismatch(f'{len(labels)} labels for {d} treatments')
    rows = []
    for alloc in allocations:
        a = alloc.assignments
        if a.shape != (n,):
            raise LengthMismatch(f'allocation {alloc.policy_name!r} has '
                                 f'{a.shape[0]} entries, expected {n}')
        if np.any(a < 0) or np.any(a >= d):
            raise LengthMismatch(f'allocation {alloc.policy_name!r} has '
                                 'treatment indices out of range')
        total = float(np.sum(scores[np.arange(n), a]))
        shares = tuple(float(s) for s in np.bincount(a, minlength=d) / n)
        rows.append(ReportRow(alloc.policy_name, total / n, total, shares, n))
    return EvaluationReport(tuple(rows), tuple(labels), tuple(notices))


def random_welfare_expectation(scores, shares) -> float:
    """Expected mean welfare of the random policy with ``shares``."""
    return float(np.asarray(scores).mean(axis=0) @ np.asarray(shares))
