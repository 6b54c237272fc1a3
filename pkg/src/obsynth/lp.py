"""Dense two-phase primal simplex for small certificate and design LPs.

Problem form:  minimize  objective · z
               subject to  ineq_lhs · z ≤ ineq_rhs
                           eq_lhs · z = eq_rhs
with z sign-free.  Internally every variable is split into a difference
of nonnegative parts, slacks turn inequalities into equalities, and
phase 1 drives artificial variables out of rows whose right-hand side
had to be negated (plus every equality row).

Bland's rule is used for both the entering and the leaving choice, so
the solver cannot cycle and identical inputs always produce identical
solutions.  All tableaus are dense; problems here have at most a few
hundred rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionError, SolverFailureError
from .linalg import as_matrix, as_vector

# Reduced costs above -EPS count as optimal; pivot candidates need a
# column entry above EPS.
EPS = 1e-9

# Phase-1 objective above this value certifies infeasibility.
FEAS_TOL = 1e-9


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """minimize objective·z s.t. ineq_lhs·z ≤ ineq_rhs, eq_lhs·z = eq_rhs."""

    objective: np.ndarray
    ineq_lhs: np.ndarray
    ineq_rhs: np.ndarray
    eq_lhs: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None

    def __post_init__(self):
        self.objective = as_vector(self.objective, "objective")
        n = self.objective.size
        if n == 0:
            raise DimensionError("LinearProgram needs at least one variable")
        self.ineq_lhs = _rows(self.ineq_lhs, n, "ineq_lhs")
        self.ineq_rhs = as_vector(self.ineq_rhs, "ineq_rhs", self.ineq_lhs.shape[0])
        self.eq_lhs = _rows(self.eq_lhs, n, "eq_lhs")
        self.eq_rhs = as_vector(
            self.eq_rhs if self.eq_rhs is not None else np.zeros(0),
            "eq_rhs",
            self.eq_lhs.shape[0],
        )

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_constraints(self) -> int:
        return self.ineq_lhs.shape[0] + self.eq_lhs.shape[0]


@dataclass
class LpSolution:
    status: LpStatus
    primal: np.ndarray | None = None
    objective_value: float | None = None
    iterations: int = 0


def _rows(M, n: int, name: str) -> np.ndarray:
    if M is None:
        return np.zeros((0, n))
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros((0, n))
    M = as_matrix(M, name)
    if M.shape[1] != n:
        raise DimensionError(f"{name} has {M.shape[1]} columns, expected {n}")
    return M


def _pivot(T: np.ndarray, b: np.ndarray, basis: np.ndarray, row: int, col: int):
    piv = T[row, col]
    T[row] /= piv
    b[row] /= piv
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    b -= factors * b[row]
    # re-zero the pivot column explicitly; the outer-product update can
    # leave roundoff dust that later pivots would amplify
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _simplex(
    T: np.ndarray,
    b: np.ndarray,
    cost: np.ndarray,
    basis: np.ndarray,
    max_iter: int,
    used: int,
) -> tuple[str, int]:
    """Run Bland-rule simplex until optimal or unbounded.

    T, b, basis are mutated in place.  Returns (verdict, iterations)
    where verdict is "optimal" or "unbounded".
    """
    m = T.shape[0]
    it = used
    while True:
        reduced = cost - cost[basis] @ T if m else cost.copy()
        enter = -1
        for j in range(reduced.size):
            if reduced[j] < -EPS:
                enter = j
                break
        if enter < 0:
            return "optimal", it
        col = T[:, enter]
        leave = -1
        best = np.inf
        for i in range(m):
            if col[i] > EPS:
                ratio = b[i] / col[i]
                if ratio < best - 1e-12 or (
                    abs(ratio - best) <= 1e-12
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            return "unbounded", it
        it += 1
        if it > max_iter:
            raise SolverFailureError(
                f"simplex exceeded the iteration cap ({max_iter})"
            )
        _pivot(T, b, basis, leave, enter)


def solve(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Solve the LP; statuses Optimal / Infeasible / Unbounded.

    Raises :class:`SolverFailureError` when the iteration cap is hit,
    which is a numerical failure, not a statement about the problem.
    """
    n = lp.num_vars
    mi = lp.ineq_lhs.shape[0]
    me = lp.eq_lhs.shape[0]
    m = mi + me
    if max_iter is None:
        max_iter = 50 * (n + m)

    # columns: [z+ (n) | z- (n) | slacks (mi)]
    width = 2 * n + mi
    T = np.zeros((m, width))
    T[:mi, :n] = lp.ineq_lhs
    T[:mi, n : 2 * n] = -lp.ineq_lhs
    T[:mi, 2 * n :] = np.eye(mi)
    T[mi:, :n] = lp.eq_lhs
    T[mi:, n : 2 * n] = -lp.eq_lhs
    b = np.concatenate([lp.ineq_rhs, lp.eq_rhs]).astype(float)

    flip = b < 0.0
    T[flip] *= -1.0
    b[flip] *= -1.0

    # equality rows and flipped inequality rows need artificials; the
    # rest start with their own slack basic
    need_art = flip.copy()
    need_art[mi:] = True
    art_rows = np.flatnonzero(need_art)
    if art_rows.size:
        art_cols = np.zeros((m, art_rows.size))
        art_cols[art_rows, np.arange(art_rows.size)] = 1.0
        T = np.hstack([T, art_cols])

    basis = np.empty(m, dtype=int)
    for i in range(mi):
        basis[i] = 2 * n + i
    art_index = {int(r): width + k for k, r in enumerate(art_rows)}
    for r, jcol in art_index.items():
        basis[r] = jcol

    iterations = 0
    if art_rows.size:
        cost1 = np.zeros(T.shape[1])
        cost1[width:] = 1.0
        verdict, iterations = _simplex(T, b, cost1, basis, max_iter, iterations)
        if verdict == "unbounded":
            raise SolverFailureError("phase-1 objective reported unbounded")
        phase1 = float(cost1[basis] @ b)
        if phase1 > FEAS_TOL:
            return LpSolution(LpStatus.INFEASIBLE, iterations=iterations)
        # pivot leftover artificials out of the basis (degenerate rows)
        # or drop rows that became linearly dependent
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] < width:
                continue
            entry = -1
            for j in range(width):
                if abs(T[i, j]) > EPS:
                    entry = j
                    break
            if entry >= 0:
                iterations += 1
                _pivot(T, b, basis, i, entry)
            else:
                keep[i] = False
        T = T[keep, :width]
        b = b[keep]
        basis = basis[keep]

    cost2 = np.concatenate([lp.objective, -lp.objective, np.zeros(mi)])
    verdict, iterations = _simplex(T, b, cost2, basis, max_iter, iterations)
    if verdict == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, iterations=iterations)

    full = np.zeros(2 * n + mi)
    full[basis] = b
    z = full[:n] - full[n : 2 * n]
    return LpSolution(LpStatus.OPTIMAL, z, float(lp.objective @ z), iterations)


def check_feasible(lp: LinearProgram, max_iter: int | None = None) -> bool:
    """True iff the constraint set admits a point (zero-objective solve)."""
    probe = LinearProgram(
        np.zeros(lp.num_vars),
        lp.ineq_lhs.copy(),
        lp.ineq_rhs.copy(),
        lp.eq_lhs.copy(),
        lp.eq_rhs.copy(),
    )
    return solve(probe, max_iter=max_iter).status is LpStatus.OPTIMAL
