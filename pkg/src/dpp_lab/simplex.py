"""Small dense two-phase simplex solver.

Minimizes c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0.  Entering and
leaving variables follow Bland's rule, so the iteration cannot cycle even on
the degenerate right-hand sides this package produces (constraint rows with
b = 0).  Pivot tolerance is 1e-10.  Problems here are desk scale (tens of
variables), so no factorization or sparsity is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-8


class LpStatus(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class UnboundedError(Exception):
    """The feasible region allows the objective to decrease without limit."""


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    x: np.ndarray | None      # values of the original variables
    objective: float | None


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]
    basis[row] = col


def _iterate(tab: np.ndarray, basis: np.ndarray, ncols: int) -> None:
    """Run Bland-rule pivots until the cost row has no negative reduced cost.

    ``tab`` has m constraint rows then the cost row; column ncols is the rhs.
    """
    m = tab.shape[0] - 1
    while True:
        cost = tab[-1, :ncols]
        enter = -1
        for j in range(ncols):
            if cost[j] < -PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return
        leave, best_ratio, best_basis = -1, np.inf, -1
        for i in range(m):
            a = tab[i, enter]
            if a > PIVOT_TOL:
                ratio = tab[i, ncols] / a
                if (ratio < best_ratio - PIVOT_TOL
                        or (abs(ratio - best_ratio) <= PIVOT_TOL and basis[i] < best_basis)):
                    leave, best_ratio, best_basis = i, ratio, int(basis[i])
        if leave < 0:
            raise UnboundedError(f"no blocking row for entering column {enter}")
        _pivot(tab, basis, leave, enter)


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> LpResult:
    """Two-phase dense simplex over nonnegative variables."""
    c = np.asarray(c, dtype=np.float64)
    n = c.shape[0]
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    slack_of_row: list[int] = []
    if A_ub is not None:
        A_ub = np.asarray(A_ub, dtype=np.float64).reshape(-1, n)
        b_ub = np.asarray(b_ub, dtype=np.float64).ravel()
        for i in range(A_ub.shape[0]):
            rows.append(A_ub[i])
            rhs.append(float(b_ub[i]))
            slack_of_row.append(i)
    n_slack = len(rows)
    if A_eq is not None:
        A_eq = np.asarray(A_eq, dtype=np.float64).reshape(-1, n)
        b_eq = np.asarray(b_eq, dtype=np.float64).ravel()
        for i in range(A_eq.shape[0]):
            rows.append(A_eq[i])
            rhs.append(float(b_eq[i]))
            slack_of_row.append(-1)
    m = len(rows)
    if m == 0:
        raise ValueError("no constraints")

    width = n + n_slack
    A = np.zeros((m, width), dtype=np.float64)
    b = np.zeros(m, dtype=np.float64)
    for i, (row, bi) in enumerate(zip(rows, rhs)):
        A[i, :n] = row
        if slack_of_row[i] >= 0:
            A[i, n + slack_of_row[i]] = 1.0
        b[i] = bi
        if b[i] < 0.0:
            A[i] *= -1.0
            b[i] = -b[i]

    # initial basis: usable slack columns, artificials elsewhere
    basis = np.full(m, -1, dtype=np.int64)
    need_art = []
    for i in range(m):
        j = n + slack_of_row[i] if slack_of_row[i] >= 0 else -1
        if j >= 0 and A[i, j] == 1.0:
            basis[i] = j
        else:
            need_art.append(i)
    n_art = len(need_art)
    total = width + n_art
    tab = np.zeros((m + 1, total + 1), dtype=np.float64)
    tab[:m, :width] = A
    tab[:m, total] = b
    for k, i in enumerate(need_art):
        tab[i, width + k] = 1.0
        basis[i] = width + k

    if n_art:
        # phase 1: minimize the artificial sum
        tab[-1, width:total] = 1.0
        for i in range(m):
            if basis[i] >= width:
                tab[-1] -= tab[i]
        try:
            _iterate(tab, basis, total)
        except UnboundedError:  # cannot happen: phase-1 objective is bounded below by 0
            return LpResult(LpStatus.INFEASIBLE, None, None)
        if -tab[-1, total] > FEAS_TOL:
            return LpResult(LpStatus.INFEASIBLE, None, None)
        # drive leftover artificials out of the basis
        drop_rows = []
        for i in range(m):
            if basis[i] >= width:
                piv = -1
                for j in range(width):
                    if abs(tab[i, j]) > PIVOT_TOL:
                        piv = j
                        break
                if piv >= 0:
                    _pivot(tab, basis, i, piv)
                else:
                    drop_rows.append(i)  # redundant constraint
        if drop_rows:
            keep = [i for i in range(m) if i not in set(drop_rows)]
            tab = np.vstack([tab[keep], tab[-1:]])
            basis = basis[keep]
            m = len(keep)

    # phase 2 over the real columns only
    tab2 = np.zeros((m + 1, width + 1), dtype=np.float64)
    tab2[:m, :width] = tab[:m, :width]
    tab2[:m, width] = tab[:m, total]
    tab2[-1, :n] = c
    for i in range(m):
        bj = int(basis[i])
        if tab2[-1, bj] != 0.0:
            tab2[-1] -= tab2[-1, bj] * tab2[i]
    try:
        _iterate(tab2, basis, width)
    except UnboundedError:
        return LpResult(LpStatus.UNBOUNDED, None, None)

    x = np.zeros(width, dtype=np.float64)
    for i in range(m):
        x[int(basis[i])] = tab2[i, width]
    obj = float(c @ x[:n])
    return LpResult(LpStatus.OPTIMAL, x[:n].copy(), obj)
