"""Observer gain synthesis via linear programming.

The admissible gains L make A - LC Metzler and Hurwitz with E - LF
nonnegative (the relaxed form drops the E - LF requirement).  After the
change of variables U = XL with X diagonal positive, optimality of the
peak-to-peak gain for the aggregate output (every error component
summed, no feedthrough) becomes a finite LP:

    minimize gamma over (X, U, alpha, gamma) such that
      X A - U C + alpha I  >= 0          (entrywise; A - LC Metzler)
      X E - U F            >= 0          (standard form only)
      sum_i (X S - U T)_ij + 1 <= -eps   for every column j (stability)
      sum_ij (X E - U F)_ij - gamma <= -eps

with (S, T) = (A, C) in continuous time, (A + A_h, C + C_h) with delay,
and the Schur shift (A_d - I, C_d) in discrete time.  The one gain L*
recovered as X^{-1} U is optimal simultaneously for every nonnegative
output weighting, which is why a single aggregate LP suffices.

X carries no normalization beyond X_ii >= eps: the stability rows pin
its scale, and any stronger floor (say X_ii >= 1) breaks the change of
variables by letting U drift off the X L* ray when the floor binds,
returning suboptimal gains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError
from .linalg import STRUCTURAL_TOL, as_matrix, is_metzler, is_nonnegative
from .lp import LinearProgram, LpStatus, check_feasible, solve
from .positive import (
    DEFAULT_EPSILON,
    ContinuousSystem,
    DelaySystem,
    DiscreteSystem,
    _closed_gain,
    hurwitz_certificate,
)

# Magnitude cap on the diagonal-shift variable; far beyond anything a
# sane instance needs, it only keeps the polytope bounded in alpha.
ALPHA_CAP = 1e6

DIAG_SIGN_CONFLICT = (
    "E - L F >= 0 conflicts with the stability requirement: some gain "
    "makes A - L C Metzler and Hurwitz within the bounds, but every such "
    "gain leaves a negative entry in E - L F"
)
DIAG_NO_STABILIZER = (
    "no admissible gain: A - L C cannot be made Metzler and Hurwitz "
    "within the gain bounds"
)


@dataclass
class ObserverSpec:
    """Synthesis options: observer form, entrywise gain bounds, margin.

    Equal lower and upper bound entries pin gain entries exactly, which
    is how structural zeros (or a fully fixed L) are expressed.
    """

    form: str = "standard"
    gain_lower: np.ndarray | None = None
    gain_upper: np.ndarray | None = None
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.form not in ("standard", "relaxed"):
            raise PreconditionError(f"unknown observer form {self.form!r}")
        self.epsilon = float(self.epsilon)
        if not (np.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise PreconditionError("epsilon must be a positive real")
        if self.gain_lower is not None:
            self.gain_lower = as_matrix(self.gain_lower, "gain_lower")
        if self.gain_upper is not None:
            self.gain_upper = as_matrix(self.gain_upper, "gain_upper")
        if (
            self.gain_lower is not None
            and self.gain_upper is not None
            and self.gain_lower.shape == self.gain_upper.shape
            and np.any(self.gain_lower > self.gain_upper)
        ):
            raise PreconditionError("gain_lower exceeds gain_upper somewhere")

    def bounds(self, n: int, r: int) -> tuple[np.ndarray | None, np.ndarray | None]:
        lo, hi = self.gain_lower, self.gain_upper
        for name, B in (("gain_lower", lo), ("gain_upper", hi)):
            if B is not None and B.shape != (n, r):
                raise DimensionError(
                    f"{name} has shape {B.shape}, expected {(n, r)}"
                )
        if lo is not None and hi is not None and np.any(lo > hi):
            raise PreconditionError("gain_lower exceeds gain_upper somewhere")
        return lo, hi


@dataclass
class DesignResult:
    """Outcome of a synthesis LP.

    On success L is the optimal gain, gamma the certified peak-to-peak
    gain of the aggregate error output, and (X_diag, U, alpha) the LP
    certificate with L = diag(X_diag)^{-1} U.  On infeasibility the
    diagnostic says which requirement could not be met.
    """

    status: str
    kind: str
    form: str
    epsilon: float
    L: np.ndarray | None = None
    gamma: float | None = None
    X_diag: np.ndarray | None = None
    U: np.ndarray | None = None
    alpha: float | None = None
    diagnostic: str | None = None


@dataclass
class CertificationReport:
    """Re-derived checks on a DesignResult; empty flags means sound."""

    passed: bool
    flags: list[str]
    gamma_independent: float | None


@dataclass
class _DesignData:
    """Canonical matrices one design LP is assembled from."""

    kind: str
    form: str
    n: int
    r: int
    sign_families: list[tuple[str, np.ndarray, np.ndarray]]  # (label, P, Q): XP - UQ >= 0
    use_alpha: bool  # alpha I added to the first family
    S: np.ndarray  # stability pair: columns of X S - U T
    T: np.ndarray
    gamma_x: np.ndarray  # gamma row: gamma >= x . gamma_x + sum_ik u_ik gamma_u_k + eps
    gamma_u: np.ndarray
    E: np.ndarray  # loop input pair for certification
    F: np.ndarray


def _data_ct(sys: ContinuousSystem, form: str) -> _DesignData:
    n, p, r = sys.n, sys.p, sys.r
    families = [("A - L C Metzler", sys.A, sys.C)]
    if form == "standard":
        families.append(("E - L F nonnegative", sys.E, sys.F))
        gx, gu = sys.E @ np.ones(p), -(sys.F @ np.ones(p))
    else:
        gx, gu = np.ones(n), np.zeros(r)
    return _DesignData(
        "continuous", form, n, r, families, True, sys.A, sys.C, gx, gu, sys.E, sys.F
    )


def _data_delay(sys: DelaySystem) -> _DesignData:
    n, p, r = sys.n, sys.p, sys.r
    families = [("A - L C Metzler", sys.A, sys.C)]
    if np.any(sys.A_h != 0.0) or np.any(sys.C_h != 0.0):
        families.append(("A_h - L C_h nonnegative", sys.A_h, sys.C_h))
    families.append(("E - L F nonnegative", sys.E, sys.F))
    return _DesignData(
        "delay",
        "standard",
        n,
        r,
        families,
        True,
        sys.A + sys.A_h,
        sys.C + sys.C_h,
        sys.E @ np.ones(p),
        -(sys.F @ np.ones(p)),
        sys.E,
        sys.F,
    )


def _data_dt(sys: DiscreteSystem) -> _DesignData:
    n, p, r = sys.n, sys.p, sys.r
    families = [
        ("A_d - L C_d nonnegative", sys.A_d, sys.C_d),
        ("E_d - L F_d nonnegative", sys.E_d, sys.F_d),
    ]
    return _DesignData(
        "discrete",
        "standard",
        n,
        r,
        families,
        False,
        sys.A_d - np.eye(n),
        sys.C_d,
        sys.E_d @ np.ones(p),
        -(sys.F_d @ np.ones(p)),
        sys.E_d,
        sys.F_d,
    )


def _data_dt_delay(A_d, A_dh, E_d, C_d, C_dh, F_d) -> _DesignData:
    sys = DiscreteSystem(A_d, E_d, C_d, F_d)
    n, p, r = sys.n, sys.p, sys.r
    A_dh = as_matrix(A_dh, "A_dh", (n, n))
    C_dh = as_matrix(np.atleast_2d(np.asarray(C_dh, dtype=float)), "C_dh", (r, n))
    families = [("A_d - L C_d nonnegative", sys.A_d, sys.C_d)]
    if np.any(A_dh != 0.0) or np.any(C_dh != 0.0):
        families.append(("A_dh - L C_dh nonnegative", A_dh, C_dh))
    families.append(("E_d - L F_d nonnegative", sys.E_d, sys.F_d))
    return _DesignData(
        "discrete-delay",
        "standard",
        n,
        r,
        families,
        False,
        sys.A_d + A_dh - np.eye(n),
        sys.C_d + C_dh,
        sys.E_d @ np.ones(p),
        -(sys.F_d @ np.ones(p)),
        sys.E_d,
        sys.F_d,
    )


def _layout(data: _DesignData) -> tuple[int, int, int]:
    """Column indices: x at 0, U row-major at n, then alpha, gamma last."""
    n, r = data.n, data.r
    i_alpha = n + n * r if data.use_alpha else -1
    i_gamma = n + n * r + (1 if data.use_alpha else 0)
    return i_alpha, i_gamma, i_gamma + 1


def _assemble(
    data: _DesignData,
    epsilon: float,
    lo: np.ndarray | None,
    hi: np.ndarray | None,
    with_gain_rows: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Rows (lhs, rhs) with lhs z <= rhs over z = [x, u, (alpha,) gamma].

    with_gain_rows=False drops the disturbance-sign family and the gamma
    row, leaving pure stabilizability; that is the diagnostic solve.
    """
    n, r = data.n, data.r
    i_alpha, i_gamma, nv = _layout(data)
    alpha_cap = ALPHA_CAP * max(1.0, float(np.max(np.abs(data.S))))

    rows: list[np.ndarray] = []
    rhs: list[float] = []

    def add(row, b):
        rows.append(row)
        rhs.append(b)

    for fam_index, (label, P, Q) in enumerate(data.sign_families):
        if not with_gain_rows and label.startswith("E"):
            continue
        w = P.shape[1]
        with_alpha = data.use_alpha and fam_index == 0
        for i in range(n):
            for j in range(w):
                row = np.zeros(nv)
                row[i] = -P[i, j]
                row[n + i * r : n + (i + 1) * r] = Q[:, j]
                if with_alpha and i == j:
                    row[i_alpha] = -1.0
                add(row, 0.0)

    for j in range(n):
        row = np.zeros(nv)
        row[:n] = data.S[:, j]
        for i in range(n):
            row[n + i * r : n + (i + 1) * r] = -data.T[:, j]
        add(row, -1.0 - epsilon)

    if with_gain_rows:
        row = np.zeros(nv)
        row[:n] = data.gamma_x
        for i in range(n):
            row[n + i * r : n + (i + 1) * r] = data.gamma_u
        row[i_gamma] = -1.0
        add(row, -epsilon)

    for i in range(n):
        row = np.zeros(nv)
        row[i] = -1.0
        add(row, -epsilon)

    if data.use_alpha:
        for sign in (1.0, -1.0):
            row = np.zeros(nv)
            row[i_alpha] = sign
            add(row, alpha_cap)

    for B, sign in ((lo, 1.0), (hi, -1.0)):
        if B is None:
            continue
        for i in range(n):
            for j in range(r):
                row = np.zeros(nv)
                row[i] = sign * B[i, j]
                row[n + i * r + j] = -sign
                add(row, 0.0)

    return np.array(rows), np.array(rhs)


def _run_design(data: _DesignData, spec: ObserverSpec) -> DesignResult:
    lo, hi = spec.bounds(data.n, data.r)
    eps = spec.epsilon
    _, i_gamma, nv = _layout(data)
    lhs, rhs = _assemble(data, eps, lo, hi)
    objective = np.zeros(nv)
    objective[i_gamma] = 1.0
    sol = solve(LinearProgram(objective, lhs, rhs))
    if sol.status is LpStatus.OPTIMAL:
        x = sol.primal[: data.n]
        U = sol.primal[data.n : data.n + data.n * data.r].reshape(data.n, data.r)
        alpha = float(sol.primal[_layout(data)[0]]) if data.use_alpha else None
        return DesignResult(
            status="optimal",
            kind=data.kind,
            form=data.form,
            epsilon=eps,
            L=U / x[:, None],
            gamma=float(sol.primal[i_gamma]),
            X_diag=x,
            U=U,
            alpha=alpha,
        )
    if sol.status is not LpStatus.INFEASIBLE:  # pragma: no cover - gamma bounded
        raise PreconditionError("design LP reported unbounded")
    has_sign_family = data.form == "standard"
    if has_sign_family:
        d_lhs, d_rhs = _assemble(data, eps, lo, hi, with_gain_rows=False)
        objective = np.zeros(nv)
        stabilizable = check_feasible(LinearProgram(objective, d_lhs, d_rhs))
        diagnostic = DIAG_SIGN_CONFLICT if stabilizable else DIAG_NO_STABILIZER
    else:
        diagnostic = DIAG_NO_STABILIZER
    return DesignResult(
        status="infeasible",
        kind=data.kind,
        form=data.form,
        epsilon=eps,
        diagnostic=diagnostic,
    )


def design_ct(sys: ContinuousSystem, spec: ObserverSpec) -> DesignResult:
    """Optimal interval-observer gain for a continuous-time plant."""
    if spec.form != "standard":
        raise PreconditionError("design_ct handles the standard form; use design_relaxed")
    return _run_design(_data_ct(sys, "standard"), spec)


def design_relaxed(sys: ContinuousSystem, spec: ObserverSpec) -> DesignResult:
    """Relaxed-form design: E - LF may change sign.

    The disturbance column of the gain condition is replaced by the
    identity input aggregated over the n error channels, so the reported
    gamma measures the n-channel relaxed error system rather than the
    p-channel one driven through E - LF.
    """
    if spec.form != "relaxed":
        raise PreconditionError("design_relaxed needs spec.form == 'relaxed'")
    return _run_design(_data_ct(sys, "relaxed"), spec)


def design_delay(sys: DelaySystem, spec: ObserverSpec) -> DesignResult:
    """Design for a delayed plant; the LP never involves h, so results
    are identical for every delay value."""
    if spec.form != "standard":
        raise PreconditionError("delay design supports the standard form only")
    return _run_design(_data_delay(sys), spec)


def design_dt(sys: DiscreteSystem, spec: ObserverSpec) -> DesignResult:
    """Design for a discrete-time plant (A_d - L C_d nonnegative and
    Schur, via the Metzler shift A_d - I)."""
    if spec.form != "standard":
        raise PreconditionError("discrete design supports the standard form only")
    return _run_design(_data_dt(sys), spec)


def design_dt_delay(A_d, A_dh, E_d, C_d, C_dh, F_d, spec: ObserverSpec) -> DesignResult:
    """Design for a discrete-time plant with a state delay."""
    if spec.form != "standard":
        raise PreconditionError("discrete design supports the standard form only")
    return _run_design(_data_dt_delay(A_d, A_dh, E_d, C_d, C_dh, F_d), spec)


def _certify_data(result: DesignResult, sys) -> _DesignData:
    if result.kind == "continuous":
        if not isinstance(sys, ContinuousSystem):
            raise PreconditionError("result was produced from a ContinuousSystem")
        return _data_ct(sys, result.form)
    if result.kind == "delay":
        if not isinstance(sys, DelaySystem):
            raise PreconditionError("result was produced from a DelaySystem")
        return _data_delay(sys)
    if result.kind == "discrete":
        if not isinstance(sys, DiscreteSystem):
            raise PreconditionError("result was produced from a DiscreteSystem")
        return _data_dt(sys)
    if result.kind == "discrete-delay":
        try:
            return _data_dt_delay(*sys)
        except TypeError as exc:
            raise PreconditionError(
                "discrete-delay certification takes the matrix tuple "
                "(A_d, A_dh, E_d, C_d, C_dh, F_d)"
            ) from exc
    raise PreconditionError(f"unknown design kind {result.kind!r}")


def certify(result: DesignResult, sys, spec: ObserverSpec) -> CertificationReport:
    """Re-derive every design condition from the returned certificate.

    Checks the LP rows at (X, U, alpha, gamma) with a 10-epsilon slack,
    the consistency L = X^{-1} U, the structure of the closed loop at L,
    and that an independently computed closed-form gain stays below
    gamma.  Flags are human-readable violation notes; none means sound.
    """
    if result.status != "optimal":
        raise PreconditionError("certify needs an optimal DesignResult")
    data = _certify_data(result, sys)
    eps = result.epsilon
    slack = 10.0 * eps
    flags: list[str] = []

    lo, hi = spec.bounds(data.n, data.r)
    lhs, rhs = _assemble(data, eps, lo, hi)
    z = np.concatenate(
        [
            result.X_diag,
            result.U.reshape(-1),
            [result.alpha] if data.use_alpha else [],
            [result.gamma],
        ]
    )
    residual = lhs @ z - rhs
    worst = int(np.argmax(residual))
    if residual[worst] > slack:
        flags.append(
            f"LP row {worst} violated by {residual[worst]:.3g} at the certificate"
        )

    recon = result.X_diag[:, None] * result.L
    if np.max(np.abs(recon - result.U)) > 1e-9 * max(1.0, float(np.max(np.abs(result.U)))):
        flags.append("L is not X^{-1} U")

    tol = max(STRUCTURAL_TOL, slack)
    L = result.L
    first_label, P0, Q0 = data.sign_families[0]
    closed_first = P0 - L @ Q0
    if data.use_alpha:
        if not is_metzler(closed_first, tol):
            flags.append(f"{first_label} fails at L")
    elif not is_nonnegative(closed_first, tol):
        flags.append(f"{first_label} fails at L")
    for label, P, Q in data.sign_families[1:]:
        if result.form == "relaxed" and label.startswith("E"):
            continue
        if not is_nonnegative(P - L @ Q, tol):
            flags.append(f"{label} fails at L")

    Scl = data.S - L @ data.T
    gamma_indep = None
    if not is_metzler(Scl, tol):
        flags.append("closed-loop stability matrix is not Metzler at L")
    elif hurwitz_certificate(Scl) is None:
        flags.append("closed-loop stability matrix is not Hurwitz at L")
    else:
        ones_row = np.ones((1, data.n))
        if result.form == "relaxed":
            Bcl = np.eye(data.n)
        else:
            Bcl = np.clip(data.E - L @ data.F, 0.0, None)
        if Bcl.shape[1]:
            gamma_indep = _closed_gain(Scl, Bcl, ones_row, np.zeros((1, Bcl.shape[1])))
        else:
            gamma_indep = 0.0
        if gamma_indep > result.gamma + slack:
            flags.append(
                f"independent gain {gamma_indep:.6g} exceeds certified "
                f"gamma {result.gamma:.6g}"
            )

    return CertificationReport(not flags, flags, gamma_indep)
