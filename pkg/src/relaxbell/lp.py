"""Dense two-phase tableau simplex, falling back to Bland's rule against cycling.

Solves  min/max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
Meant for the desk-scale problems in this package (a few thousand
columns at most); there is no sparse handling and no presolve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = "optimal", "infeasible", "unbounded", "iteration_limit"
_DEGENERATE_RUN = 50


@dataclass(frozen=True)
class LPSolution:
    status: str
    x: np.ndarray | None
    fun: float | None
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _run(T: np.ndarray, basis: list[int], n_cols: int, tol: float, max_iter: int) -> tuple[str, int]:
    """Minimize the objective in the last row of T over the first n_cols columns.

    Pricing is by most negative reduced cost until a run of degenerate
    pivots appears; from then on Bland's smallest-index rule is used, which
    cannot cycle.
    """
    m = T.shape[0] - 1
    it = 0
    stalled = 0
    bland = False
    while it < max_iter:
        reduced = T[-1, :n_cols]
        candidates = np.nonzero(reduced < -tol)[0]
        if candidates.size == 0:
            return OPTIMAL, it
        col = int(candidates[0]) if bland else int(candidates[np.argmin(reduced[candidates])])
        before = T[-1, -1]
        column = T[:m, col]
        positive = column > tol
        if not positive.any():
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[positive] = T[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + tol * max(1.0, abs(best)))[0]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        stalled = stalled + 1 if abs(T[-1, -1] - before) <= tol else 0
        bland = bland or stalled >= _DEGENERATE_RUN
    return ITERATION_LIMIT, it


def solve_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    *,
    maximize: bool = False,
    tol: float = 1e-9,
    max_iter: int = 100_000,
) -> LPSolution:
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.array(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.array(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.array(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.array(b_eq, dtype=float).reshape(-1)
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError("constraint shapes do not match the objective")

    # Equilibrate rows so the feasibility tolerance is relative to each row.
    for M_, v_ in ((A_ub, b_ub), (A_eq, b_eq)):
        scale = np.abs(M_).max(axis=1, initial=0.0)
        scale[scale == 0] = 1.0
        M_ /= scale[:, None]
        v_ /= scale

    n_slack = b_ub.size
    m = n_slack + b_eq.size
    A = np.zeros((m, n + n_slack))
    A[:n_slack, :n] = A_ub
    A[:n_slack, n:] = np.eye(n_slack)
    A[n_slack:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    negative = b < 0
    A[negative] *= -1
    b[negative] *= -1
    n_real = n + n_slack
    cost = np.concatenate([-c if maximize else c, np.zeros(n_slack)])

    # Phase one: inequality rows with b >= 0 start on their slack; every
    # other row gets an artificial column, and their sum is minimized.
    needs = [r for r in range(m) if r >= n_slack or negative[r]]
    n_art = len(needs)
    T = np.zeros((m + 1, n_real + n_art + 1))
    T[:m, :n_real] = A
    T[:m, -1] = b
    basis = [n + r for r in range(m)]
    for k, r in enumerate(needs):
        T[r, n_real + k] = 1.0
        basis[r] = n_real + k
        T[-1, :n_real] -= A[r]
        T[-1, -1] -= b[r]
    status, it1 = _run(T, basis, n_real + n_art, tol, max_iter)
    if status != OPTIMAL:
        return LPSolution(status, None, None, it1)
    if -T[-1, -1] > tol * max(1.0, np.abs(b).max(initial=0.0)) * 10:
        return LPSolution(INFEASIBLE, None, None, it1)

    # Drive artificials out of the basis; rows where that is impossible are redundant.
    keep = []
    for r in range(m):
        if basis[r] >= n_real:
            nz = np.nonzero(np.abs(T[r, :n_real]) > tol)[0]
            if nz.size == 0:
                continue
            _pivot(T, r, int(nz[0]))
            basis[r] = int(nz[0])
        keep.append(r)
    T = np.vstack([T[keep][:, list(range(n_real)) + [T.shape[1] - 1]], np.zeros((1, n_real + 1))])
    basis = [basis[r] for r in keep]

    # Phase two objective row: reduced costs relative to the current basis.
    T[-1, :n_real] = cost
    T[-1, -1] = 0.0
    for r, j in enumerate(basis):
        if cost[j] != 0.0:
            T[-1] -= cost[j] * T[r]
    status, it2 = _run(T, basis, n_real, tol, max_iter - it1)
    if status != OPTIMAL:
        return LPSolution(status, None, None, it1 + it2)

    x = np.zeros(n_real)
    x[basis] = T[:-1, -1]
    # One refinement solve against the original data trims accumulated pivot error.
    B = A[keep][:, basis]
    try:
        refined = np.linalg.solve(B, b[keep])
        if np.all(refined >= -tol):
            x[basis] = refined
    except np.linalg.LinAlgError:
        pass
    x = np.clip(x[:n], 0.0, None)
    return LPSolution(OPTIMAL, x, float(c @ x), it1 + it2)
