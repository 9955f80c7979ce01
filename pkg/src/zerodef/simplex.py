"""Small dense two-phase simplex for the package's linear feasibility tests.

Problems here have at most a few dozen variables, so a full-tableau method
with Bland's rule is exact enough and avoids an external solver dependency.
Solves  max c@x  subject to  A@x = b, x >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

_PIVOT_TOL = 1e-11
_MAX_ITERS = 20000


@dataclass
class SimplexResult:
    status: str  # "optimal" | "unbounded" | "infeasible"
    x: np.ndarray | None
    value: float


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def _run(T, basis, cost):
    """Minimize cost@x on the tableau in place; returns False if unbounded."""
    m = T.shape[0]
    for _ in range(_MAX_ITERS):
        cb = cost[basis]
        reduced = cost - cb @ T[:, :-1]
        enter = -1
        for j in range(len(cost)):  # Bland's rule: first improving column
            if reduced[j] < -_PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return True
        leave, best = -1, np.inf
        for i in range(m):
            a = T[i, enter]
            if a > _PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < best - 1e-15 or (
                    abs(ratio - best) <= 1e-15 and (leave < 0 or basis[i] < basis[leave])
                ):
                    best, leave = ratio, i
        if leave < 0:
            return False
        _pivot(T, basis, leave, enter)
    raise NumericalError("simplex iteration limit exceeded")


def maximize(c, A, b) -> SimplexResult:
    """Two-phase simplex for max c@x with A@x = b and x >= 0."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.array(c, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # Phase 1: artificial identity basis, minimize the artificial total.
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    if not _run(T, basis, cost1):
        raise NumericalError("phase-1 subproblem unbounded")
    if cost1[basis] @ T[:, -1] > 1e-8 * (1.0 + abs(b).max(initial=0.0)):
        return SimplexResult("infeasible", None, -np.inf)

    # Drive leftover artificials out of the basis (or drop redundant rows).
    keep = []
    for i in range(m):
        if basis[i] >= n:
            piv = next(
                (j for j in range(n) if abs(T[i, j]) > _PIVOT_TOL), None
            )
            if piv is None:
                continue  # redundant constraint
            _pivot(T, basis, i, piv)
        keep.append(i)
    T = np.hstack([T[keep][:, :n], T[keep][:, -1:]])
    basis = [basis[i] for i in keep]

    cost2 = -c  # minimize the negated objective
    if not _run(T, basis, cost2):
        return SimplexResult("unbounded", None, np.inf)
    x = np.zeros(n)
    for i, bi in enumerate(basis):
        x[bi] = T[i, -1]
    return SimplexResult("optimal", x, float(c @ x))


def feasible_nonneg(A_eq, b_eq) -> np.ndarray | None:
    """A nonnegative solution of A_eq@x = b_eq, or None if infeasible."""
    A_eq = np.asarray(A_eq, dtype=float)
    res = maximize(np.zeros(A_eq.shape[1]), A_eq, b_eq)
    return res.x if res.status == "optimal" else None
