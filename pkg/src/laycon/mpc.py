"""Discrete-time battery-energy planner.

Condenses the receding-horizon energy tracking problem (quadratic cost on
the battery state of charge, affine abstract dynamics, current/slew/
supercapacitor-coupling/SOC constraints) into a dense QP over the battery
current sequence, applies the hold-previous-reference fallback when the
tightened problem is infeasible, and evaluates the planner-side ISS
certificate bounding how far persistent model mismatch can push the
closed loop off its goal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hess import HessParams, battery_interface_bounds
from .qp import QpProblem, QpSolver, QpStatus, solve_qp


class AllInfeasibleError(RuntimeError):
    """No sampled state admitted a feasible plan."""


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int
    t_s: float
    q_weight: float
    e_b_goal: float
    v_nom: float
    i_b_bar: float
    i_s_bar: float
    e_b_range: tuple[float, float]
    e_s_range: tuple[float, float]
    slew_bound: float
    tighten_eps_e: float
    lambda_b_energy: float
    lambda_s: float

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least one step")
        if self.t_s <= 0.0 or self.slew_bound <= 0.0:
            raise ValueError("t_s and slew_bound must be positive")
        if self.q_weight < 0.0 or self.tighten_eps_e < 0.0:
            raise ValueError("q_weight and tighten_eps_e must be nonnegative")
        for lo, hi in (self.e_b_range, self.e_s_range):
            if hi <= lo:
                raise ValueError("SOC ranges must be nonempty intervals")

    @classmethod
    def from_hess(cls, p: HessParams, horizon: int, t_s: float, q_weight: float,
                  e_b_goal: float, e_b_range, e_s_range, tighten_eps_e: float = 0.0):
        """Derive the slew bound from the battery loop's per-period capacity."""
        slew, _ = battery_interface_bounds(p, t_s)
        return cls(
            horizon=horizon, t_s=t_s, q_weight=q_weight, e_b_goal=e_b_goal,
            v_nom=p.v_nom, i_b_bar=p.i_b_bar, i_s_bar=p.i_s_bar,
            e_b_range=tuple(e_b_range), e_s_range=tuple(e_s_range),
            slew_bound=slew, tighten_eps_e=tighten_eps_e,
            lambda_b_energy=p.lambda_b_energy, lambda_s=p.lambda_s,
        )

    @property
    def r_bar(self) -> tuple[float, float]:
        """Per-period reference step bound (voltage target fixed, current slewed)."""
        return (0.0, self.slew_bound)

    @property
    def gain_b(self) -> float:
        """Battery energy gained per unit current over one period."""
        return self.t_s * self.lambda_b_energy * self.v_nom

    @property
    def gain_s(self) -> float:
        return self.t_s * self.lambda_s * self.v_nom


@dataclass(frozen=True)
class PlanResult:
    r_k: tuple[float, float]  # (voltage target, battery current reference)
    feasible: bool
    V_N_star: float | None
    fallback_used: bool


@dataclass(frozen=True)
class PlannerIssData:
    """Value-function sandwich and descent coefficients for the planner ISS bound."""

    lambda_min_P: float
    lambda_max_P: float
    L_V: float
    lambda_min_Q: float

    def __post_init__(self):
        if min(self.lambda_min_P, self.lambda_max_P, self.lambda_min_Q) <= 0.0 or self.L_V < 0.0:
            raise ValueError("sandwich coefficients must be positive, L_V nonnegative")
        if self.lambda_min_P > self.lambda_max_P:
            raise ValueError("lambda_min_P must not exceed lambda_max_P")


def abstract_step(y_hat, i_b_ref: float, d_hat: float, cfg: PlannerConfig) -> np.ndarray:
    """One step of the planner's abstract energy model: the bus is taken as
    regulated at V_nom, so the supercapacitor absorbs -I_B - d."""
    e_b, e_s = float(y_hat[0]), float(y_hat[1])
    return np.array([
        e_b + cfg.gain_b * i_b_ref,
        e_s + cfg.gain_s * (-i_b_ref - d_hat),
    ])


def build_qp(y_k, d_forecast, r_prev: float, cfg: PlannerConfig) -> QpProblem:
    """Condense the planning problem over the battery current sequence.

    SOC rows for prediction step j are tightened by j * tighten_eps_e on
    both sides, so per-step mismatch cannot strand a nominally feasible
    plan inside the horizon.
    """
    N = cfg.horizon
    d = np.asarray(d_forecast, dtype=float).reshape(-1)
    if d.shape[0] < N:
        raise ValueError(f"disturbance forecast shorter than horizon ({d.shape[0]} < {N})")
    d = d[:N]
    if cfg.q_weight <= 0.0:
        raise ValueError("condensed cost requires q_weight > 0")
    e_b0, e_s0 = float(y_k[0]), float(y_k[1])
    S = np.tril(np.ones((N, N)))
    c_b, c_s = cfg.gain_b, cfg.gain_s
    delta = e_b0 - cfg.e_b_goal

    H = 2.0 * cfg.q_weight * c_b * c_b * (S.T @ S)
    g = 2.0 * cfg.q_weight * c_b * delta * (S.T @ np.ones(N))

    rows, rhs = [], []
    eye = np.eye(N)
    # battery current box
    rows.append(eye); rhs.append(np.full(N, cfg.i_b_bar))
    rows.append(-eye); rhs.append(np.full(N, cfg.i_b_bar))
    # slew: first step against the held reference, then consecutive steps
    D = eye - np.diag(np.ones(N - 1), -1) if N > 1 else eye
    slew_rhs = np.full(N, cfg.slew_bound)
    slew_rhs[0] += r_prev
    rows.append(D); rhs.append(slew_rhs)
    slew_rhs_neg = np.full(N, cfg.slew_bound)
    slew_rhs_neg[0] -= r_prev
    rows.append(-D); rhs.append(slew_rhs_neg)
    # supercapacitor coverage of the bus balance: |-u - d| <= i_s_bar
    rows.append(-eye); rhs.append(np.full(N, cfg.i_s_bar) + d)
    rows.append(eye); rhs.append(np.full(N, cfg.i_s_bar) - d)
    # tightened SOC corridors
    steps = np.arange(1, N + 1, dtype=float)
    tighten = steps * cfg.tighten_eps_e
    sd = S @ d
    rows.append(c_b * S); rhs.append(cfg.e_b_range[1] - tighten - e_b0)
    rows.append(-c_b * S); rhs.append(e_b0 - cfg.e_b_range[0] - tighten)
    rows.append(-c_s * S); rhs.append(cfg.e_s_range[1] - tighten - e_s0 + c_s * sd)
    rows.append(c_s * S); rhs.append(e_s0 - cfg.e_s_range[0] - tighten - c_s * sd)

    return QpProblem(H, g, np.vstack(rows), np.concatenate(rhs))


def plan(y_k, d_forecast, r_prev: float, cfg: PlannerConfig, solver: QpSolver | None = None) -> PlanResult:
    """Receding-horizon step: solve the condensed QP and extract the first
    reference; on infeasibility hold the previous reference (a zero step,
    so the slew guarantee survives the fallback)."""
    problem = build_qp(y_k, d_forecast, r_prev, cfg)
    sol = solve_qp(problem, max_iters=50 * max(cfg.horizon, 4), solver=solver)
    if sol.status is QpStatus.OPTIMAL:
        offset = cfg.q_weight * cfg.horizon * (float(y_k[0]) - cfg.e_b_goal) ** 2
        value = max(0.0, sol.objective + offset)
        return PlanResult(
            r_k=(cfg.v_nom, float(sol.x[0])),
            feasible=True,
            V_N_star=value,
            fallback_used=False,
        )
    return PlanResult(r_k=(cfg.v_nom, r_prev), feasible=False, V_N_star=None, fallback_used=True)


class Planner:
    """Receding-horizon wrapper owning the held reference and QP workspace.

    One planner per simulation; not shared across concurrent runs.
    """

    def __init__(self, cfg: PlannerConfig, r_init: float = 0.0, solver: QpSolver | None = None):
        self.cfg = cfg
        self.solver = solver or QpSolver()
        self.r_prev = r_init

    def step(self, y_k, d_forecast) -> PlanResult:
        result = plan(y_k, d_forecast, self.r_prev, self.cfg, self.solver)
        self.r_prev = result.r_k[1]
        return result


def planner_iss_bound(data: PlannerIssData, eps_e: float) -> float:
    """Ultimate goal-tracking radius induced by per-step mismatch eps_e:
    sqrt((lambda_max_P / lambda_min_P) * (L_V / lambda_min_Q) * eps_e)."""
    if eps_e < 0.0:
        raise ValueError("eps_e must be nonnegative")
    return float(np.sqrt((data.lambda_max_P / data.lambda_min_P) * (data.L_V / data.lambda_min_Q) * eps_e))


def estimate_lipschitz(
    cfg: PlannerConfig,
    sample_count: int,
    sample_radius: float,
    solver: QpSolver | None = None,
    seed: int = 0,
) -> float:
    """Empirical lower estimate of the value function's Lipschitz constant.

    Samples state pairs within sample_radius uniformly from the SOC box
    (seeded, so repeated runs agree) and takes the steepest observed
    difference quotient. Zero cost weight short-circuits to zero: the
    value function is then constant.
    """
    if sample_count < 2:
        raise ValueError("need at least two samples")
    if cfg.q_weight == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    solver = solver or QpSolver()
    d_zero = np.zeros(cfg.horizon)

    def value(y):
        res = plan(y, d_zero, 0.0, cfg, solver)
        return res.V_N_star

    best = None
    for _ in range(sample_count):
        y = np.array([
            rng.uniform(*cfg.e_b_range),
            rng.uniform(*cfg.e_s_range),
        ])
        step = rng.uniform(-sample_radius, sample_radius, size=2) / np.sqrt(2.0)
        y2 = np.clip(y + step, [cfg.e_b_range[0], cfg.e_s_range[0]], [cfg.e_b_range[1], cfg.e_s_range[1]])
        gap = float(np.linalg.norm(y2 - y))
        if gap < 1e-9:
            continue
        v1, v2 = value(y), value(y2)
        if v1 is None or v2 is None:
            continue
        ratio = abs(v2 - v1) / gap
        if best is None or ratio > best:
            best = ratio
    if best is None:
        raise AllInfeasibleError("no sampled state pair was feasible")
    return float(best)


def descent_check(traj, data: PlannerIssData, eps_e: float, e_b_goal: float, tol: float = 1e-9):
    """Per-step monitor of the planner's dissipation inequality:
    V*(y+) - V*(y) <= -lambda_min_Q |E_B - goal|^2 + L_V eps_e.
    Failures are reported, not raised; callers log them."""
    traj = list(traj)
    verdicts = []
    for (y_k, v_k), (_, v_next) in zip(traj, traj[1:]):
        if v_k is None or v_next is None:
            raise ValueError("descent check requires consecutive optimal values (no fallback steps)")
        dist2 = (float(y_k[0]) - e_b_goal) ** 2
        verdicts.append(bool(v_next - v_k <= -data.lambda_min_Q * dist2 + data.L_V * eps_e + tol))
    return verdicts
