"""Gated minimum-cost one-to-one matching between tracks and detections.

Entries above the gate are forbidden.  Among matchings that leave no
admissible pair unmatched unnecessarily (maximum cardinality over admissible
entries), the solver returns one of minimum total cost; this is obtained by
clamping forbidden entries to a constant that dominates any admissible total
and solving the resulting dense assignment problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import MalformedInputError


@dataclass(frozen=True)
class AssignmentResult:
    matches: tuple[tuple[int, int], ...]  # (row, col) pairs, sorted by row
    unmatched_rows: tuple[int, ...]
    unmatched_cols: tuple[int, ...]
    total_cost: float


def assign(cost_matrix: np.ndarray, gate: float = math.inf) -> AssignmentResult:
    """Solve the gated assignment problem over a rows x cols cost matrix.

    Costs must be finite and nonnegative; pairs with cost > ``gate`` are never
    matched.  Empty matrices yield an empty matching.
    """
    cost = np.asarray(cost_matrix, dtype=np.float64)
    if cost.ndim != 2:
        raise MalformedInputError(f"cost matrix must be 2-D, got shape {cost.shape}")
    n_rows, n_cols = cost.shape
    if n_rows == 0 or n_cols == 0:
        return AssignmentResult(
            matches=(),
            unmatched_rows=tuple(range(n_rows)),
            unmatched_cols=tuple(range(n_cols)),
            total_cost=0.0,
        )
    if not np.all(np.isfinite(cost)):
        raise MalformedInputError("cost matrix contains non-finite entries")
    if np.any(cost < 0):
        raise MalformedInputError("cost matrix contains negative entries")

    admissible = cost <= gate
    # Any admissible total is below forbidden_cost, so the solver first
    # maximizes the number of admissible pairs, then minimizes their cost.
    max_admissible = float(cost[admissible].max()) if admissible.any() else 0.0
    forbidden_cost = (max_admissible + 1.0) * (min(n_rows, n_cols) + 1)
    clamped = np.where(admissible, cost, forbidden_cost)

    rows, cols = linear_sum_assignment(clamped)
    matches = [
        (int(r), int(c)) for r, c in zip(rows, cols) if admissible[r, c]
    ]
    matches.sort()
    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    return AssignmentResult(
        matches=tuple(matches),
        unmatched_rows=tuple(r for r in range(n_rows) if r not in matched_rows),
        unmatched_cols=tuple(c for c in range(n_cols) if c not in matched_cols),
        total_cost=float(sum(cost[r, c] for r, c in matches)),
    )
