"""Dense convex QP solver for the planner.

Solves min 1/2 x'Hx + g'x subject to A x <= b with H symmetric positive
definite, by a dual active-set iteration: start at the unconstrained
optimum, repeatedly pick the most violated row, and take primal/dual
steps that keep the working-set multipliers nonnegative. Factorizations
(Cholesky of H once, Cholesky of the working-set Gram matrix per change)
are recomputed rather than updated; problems here are at most a few tens
of variables.

Infeasibility is a first-class status, detected when a violated row is a
nonnegative combination of active rows with no compatible bound (a Farkas
certificate), so the planner's fallback can trigger without exceptions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITER_LIMIT = "iter_limit"


@dataclass(frozen=True)
class QpProblem:
    """min 1/2 x'Hx + g'x  s.t.  A_ineq x <= b_ineq (rowwise)."""

    H: np.ndarray
    g: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        g = np.asarray(self.g, dtype=float).reshape(-1)
        A = np.asarray(self.A_ineq, dtype=float).reshape(-1, H.shape[0]) if np.size(self.A_ineq) else np.zeros((0, H.shape[0]))
        b = np.asarray(self.b_ineq, dtype=float).reshape(-1)
        if H.shape[0] != H.shape[1] or H.shape[0] != g.shape[0]:
            raise ValueError("H must be square and match g")
        if A.shape[0] != b.shape[0]:
            raise ValueError("A_ineq row count must match b_ineq length")
        H = 0.5 * (H + H.T)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "A_ineq", A)
        object.__setattr__(self, "b_ineq", b)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.A_ineq.shape[0]


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    objective: float
    status: QpStatus
    active_set: tuple[int, ...]
    kkt_residual: float
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0


class QpSolver:
    """One solver instance per caller; holds the last active set for
    inspection across receding-horizon resolves."""

    def __init__(self):
        self.last_active_set: tuple[int, ...] = ()

    def solve(self, p: QpProblem, max_iters: int = 200) -> QpSolution:
        sol = _dual_active_set(p, max_iters)
        if sol.status is QpStatus.OPTIMAL:
            self.last_active_set = sol.active_set
        return sol


def _chol_solve(L, rhs):
    y = np.linalg.solve(L, rhs)
    return np.linalg.solve(L.T, y)


def _dual_active_set(p: QpProblem, max_iters: int) -> QpSolution:
    H, g, A, b = p.H, p.g, p.A_ineq, p.b_ineq
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise ValueError("cost Hessian must be symmetric positive definite") from exc

    x = _chol_solve(L, -g)
    work: list[int] = []
    u: list[float] = []
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 0.0)
    tol_violation = 1e-10 * scale

    def directions(a_new):
        """Primal/dual step directions for bringing row a_new into the set.
        Returns None when the working-set Gram matrix has gone numerically
        rank-deficient; the caller stalls out with a status rather than an
        exception."""
        h_inv_a = _chol_solve(L, a_new)
        if not work:
            return h_inv_a, np.zeros(0)
        N = A[work].T  # columns are active row normals
        Y = np.linalg.solve(L, N)
        B = Y.T @ Y  # working-set Gram matrix in the H^-1 metric
        try:
            Lb = np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            return None
        r = _chol_solve(Lb, N.T @ h_inv_a)
        z = h_inv_a - _chol_solve(L, N @ r)
        return z, r

    iters = 0
    while iters < max_iters:
        iters += 1
        violations = A @ x - b if p.m else np.zeros(0)
        if work:
            violations = violations.copy()
            violations[work] = -np.inf  # active rows hold with equality
        if p.m == 0 or np.max(violations) <= tol_violation:
            return _finish(p, x, work, u, QpStatus.OPTIMAL, iters)
        idx = int(np.argmax(violations))
        a_new = A[idx]
        u_new = 0.0

        while iters < max_iters:
            step = directions(a_new)
            if step is None:
                return _finish(p, x, work, u, QpStatus.ITER_LIMIT, iters)
            z, r = step
            # dual blocking step: first active multiplier driven to zero
            t1, k_drop = np.inf, -1
            for j, rj in enumerate(r):
                if rj > 1e-12 and u[j] / rj < t1:
                    t1, k_drop = u[j] / rj, j
            zta = float(z @ a_new)
            if zta > 1e-12 * max(1.0, float(a_new @ a_new)):
                t2 = (float(a_new @ x) - b[idx]) / zta
            else:
                t2 = np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                # violated row is a nonnegative combination of active rows:
                # no point can satisfy them jointly (Farkas certificate)
                return _finish(p, x, work, u, QpStatus.INFEASIBLE, iters)
            if np.isfinite(t2):
                x = x - t * z
            u = [uj - t * rj for uj, rj in zip(u, r)]
            u_new += t
            if t == t2:
                work.append(idx)
                u.append(u_new)
                break
            work.pop(k_drop)
            u.pop(k_drop)
            iters += 1
    return _finish(p, x, work, u, QpStatus.ITER_LIMIT, iters)


def _finish(p, x, work, u, status, iters):
    lam = np.zeros(p.m)
    for j, idx in enumerate(work):
        lam[idx] = u[j]
    stationarity = p.H @ x + p.g + p.A_ineq.T @ lam if p.m else p.H @ x + p.g
    kkt = float(np.max(np.abs(stationarity))) if stationarity.size else 0.0
    obj = float(0.5 * x @ p.H @ x + p.g @ x)
    return QpSolution(
        x=x,
        objective=obj,
        status=status,
        active_set=tuple(sorted(work)),
        kkt_residual=kkt,
        lam=lam,
        iterations=iters,
    )


def solve_qp(p: QpProblem, max_iters: int = 200, solver: QpSolver | None = None) -> QpSolution:
    """Solve a strictly convex inequality-constrained QP. Never raises for
    infeasible or stalled problems; inspect QpSolution.status."""
    return (solver or QpSolver()).solve(p, max_iters)


def feasibility_check(p: QpProblem, max_iters: int = 200) -> bool:
    """True iff some x satisfies every inequality (within 1e-8).

    Runs the same active-set machinery on the least-norm-point problem
    min 1/2 ||x||^2 over the constraint set; only the status matters.
    """
    if p.m == 0:
        return True
    probe = QpProblem(np.eye(p.n), np.zeros(p.n), p.A_ineq, p.b_ineq)
    sol = solve_qp(probe, max_iters)
    if sol.status is QpStatus.INFEASIBLE:
        return False
    return bool(np.max(p.A_ineq @ sol.x - p.b_ineq) <= 1e-8)
