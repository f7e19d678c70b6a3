"""Maximum treatment shares enforced through treatment-specific costs.

Costs are in outcome units and are subtracted from the policy scores before
the tree search. They are calibrated on the best-score allocation (each row
gets its highest adjusted score), not on a tree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PolicyData
from .errors import DimensionMismatch, Infeasible


@dataclass(frozen=True)
class ShareConstraint:
    max_shares: tuple[float, ...]
    tolerance: float = 0.005
    max_iterations: int = 200

    def __post_init__(self):
        shares = tuple(float(s) for s in self.max_shares)
        object.__setattr__(self, 'max_shares', shares)
        if any(not 0 < s <= 1 for s in shares):
            raise Infeasible(f'max shares must lie in (0, 1]: {shares}')
        if sum(shares) < 1 - 1e-12:
            raise Infeasible(f'max shares sum to {sum(shares):.4f} < 1; some '
                             'rows could not be assigned')

    @property
    def unconstrained(self) -> bool:
        return all(s >= 1 for s in self.max_shares)


@dataclass(frozen=True)
class CostVector:
    costs: np.ndarray
    iterations_used: int
    achieved_shares: np.ndarray
    converged: bool


def allocation_shares(scores: np.ndarray) -> np.ndarray:
    d = scores.shape[1]
    best = np.argmax(scores, axis=1)
    return np.bincount(best, minlength=d) / scores.shape[0]


def apply_costs(scores, costs) -> np.ndarray:
    """``scores[i, j] - costs[j]``."""
    scores = np.asarray(scores, dtype=np.float64)
    if isinstance(costs, CostVector):
        costs = costs.costs
    costs = np.asarray(costs, dtype=np.float64)
    if scores.ndim != 2 or costs.shape != (scores.shape[1],):
        raise DimensionMismatch(f'costs of shape {costs.shape} do not fit '
                                f'scores of shape {scores.shape}')
    return scores - costs


def adjust_costs_for_shares(data: PolicyData | np.ndarray,
                            constraint: ShareConstraint) -> CostVector:
    """Find costs under which the best-score allocation respects the caps.

    Starting from zero, every treatment whose share exceeds its cap by more
    than the tolerance has its cost raised by ``sd * (share - cap)``, where
    ``sd`` is the standard deviation of all score entries; costs are then
    shifted so the smallest is zero. Stops once all caps hold or after
    ``max_iterations`` rounds (``converged`` is False in that case).
    """
    scores = data.scores if isinstance(data, PolicyData) else np.asarray(data)
    d = scores.shape[1]
    caps = np.array(constraint.max_shares)
    if caps.shape != (d,):
        raise DimensionMismatch(f'{len(caps)} max shares for {d} treatments')
    costs = np.zeros(d)
    sd = float(np.std(scores))
    shares = allocation_shares(scores)
    iterations = 0
    converged = bool(np.all(shares <= caps + constraint.tolerance))
    while not converged and iterations < constraint.max_iterations:
        iterations += 1
        over = shares > caps + constraint.tolerance
        costs[over] += sd * (shares[over] - caps[over])
        costs -= costs.min()
        shares = allocation_shares(scores - costs)
        converged = bool(np.all(shares <= caps + constraint.tolerance))
    return CostVector(costs, max(iterations, 1), shares, converged)
