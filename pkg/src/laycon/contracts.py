"""Assume-guarantee clause monitors and cross-layer budget checks.

Each clause checker is a pure function over a completed (or accumulating)
trajectory: environment disturbance bound, reference slew, state/input
safety, end-of-period tracking, one-step model mismatch, and the
goal-convergence guarantee. Violations are reported, never raised, so
safety monitoring keeps running after a liveness clause fails.

The module also evaluates the two cross-layer budgets: the vertical
compatibility inequality eps_E + eps_T + delta < eps_H, and the
plant-specific mismatch bound eps_E assembled from transit and settling
contributions of both energy channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .erg import gamma
from .iss_cert import SettlingTimes, TimingVerdict
from .numkit import SpdMatrix


@dataclass(frozen=True)
class ContractSpec:
    """All contract tolerances and the safe-set geometry."""

    eps_e: float  # one-step abstraction mismatch budget (A-s)
    eps_t: float  # planner ultimate tracking radius (A-s)
    eps_l: tuple[float, float]  # end-of-period tracking tolerance (V, A)
    eps_h: float  # end-to-end liveness band (A-s)
    r_bar: tuple[float, float]  # per-period reference step bound (V, A)
    w_max: float  # disturbance magnitude bound (A/s)
    t_s: float
    delta: float  # settling slack
    v_box: tuple[float, float]
    i_s_box: tuple[float, float]
    i_b_box: tuple[float, float]
    u_bounds: tuple[float, float]  # (u_s_bar, u_b_bar)
    y_goal: float  # battery energy target (A-s)

    def __post_init__(self):
        if min(self.eps_e, self.eps_t, self.eps_h, self.w_max) < 0.0:
            raise ValueError("tolerances must be nonnegative")
        if self.delta <= 0.0:
            raise ValueError("settling slack delta must be positive")
        if self.t_s <= 0.0:
            raise ValueError("sampling period must be positive")


@dataclass
class MonitorReport:
    """Per-clause verdict arrays over one run, plus derived liveness data."""

    verdicts: dict[str, np.ndarray] = field(default_factory=dict)
    first_violation: dict[str, int | None] = field(default_factory=dict)
    w_tilde: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    k_live: int | None = None

    def record(self, clause: str, values) -> None:
        arr = np.asarray(values, dtype=bool)
        self.verdicts[clause] = arr
        bad = np.flatnonzero(~arr)
        self.first_violation[clause] = int(bad[0]) if bad.size else None

    def all_pass(self) -> bool:
        """Every invariance-style clause clean; the convergence clause is
        judged by a finite K_live, not by its pre-settling samples."""
        for name, first in self.first_violation.items():
            if name != "G_iss" and first is not None:
                return False
        if "G_iss" in self.verdicts:
            return self.k_live is not None
        return True

    def violation_counts(self) -> dict[str, int]:
        return {k: int(np.sum(~v)) for k, v in self.verdicts.items()}


def _tol(bound):
    """Closed comparisons survive integrator dust at exactly-saturated
    boundaries: 1e-8 absolute plus 1e-8 relative to the bound."""
    return 1e-8 + 1e-8 * np.abs(np.asarray(bound, dtype=float))


def check_A_env(w_samples, w_max: float):
    """Disturbance stays inside its assumed magnitude bound (closed)."""
    w = np.asarray(w_samples, dtype=float)
    return np.abs(w) <= w_max + _tol(w_max)


def check_G_ref(r_seq, r_bar):
    """Per-transition reference step bound, componentwise."""
    r = np.asarray(r_seq, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    if r.shape[0] < 2:
        raise ValueError("need at least two reference samples")
    steps = np.abs(np.diff(r, axis=0))
    bounds = np.asarray(r_bar, dtype=float)
    return np.all(steps <= bounds + _tol(bounds), axis=1)


def check_G_safe(states, inputs, spec: ContractSpec):
    """Per-sample safety: (V_gr, I_S, I_B) in the safe box and both inputs
    within their saturation limits."""
    x = np.asarray(states, dtype=float)
    u = np.asarray(inputs, dtype=float)
    boxes = (spec.v_box, spec.i_s_box, spec.i_b_box)
    ok = np.ones(x.shape[0], dtype=bool)
    for j, (lo, hi) in enumerate(boxes):
        ok &= (x[:, j] >= lo - _tol(lo)) & (x[:, j] <= hi + _tol(hi))
    ok &= np.abs(u[:, 0]) <= spec.u_bounds[0] + _tol(spec.u_bounds[0])
    ok &= np.abs(u[:, 1]) <= spec.u_bounds[1] + _tol(spec.u_bounds[1])
    return ok


def check_G_track(h_r_at_period_ends, r_seq, eps_l):
    """End-of-period tracking: the fast outputs reached the reference that
    was held over the period, within the componentwise tolerance."""
    ends = np.asarray(h_r_at_period_ends, dtype=float)
    refs = np.asarray(r_seq, dtype=float)
    if ends.shape != refs.shape:
        raise ValueError("sample-end outputs and references must align")
    bounds = np.asarray(eps_l, dtype=float)
    return np.all(np.abs(ends - refs) <= bounds + _tol(bounds), axis=1)


def check_A_mis(y_samples, predictions, eps_e: float):
    """One-step abstraction mismatch w~_k = y_{k+1} - prediction_k, with the
    max-norm over the two energy channels checked against eps_e.
    Returns (verdicts, w~ sequence)."""
    y = np.asarray(y_samples, dtype=float)
    pred = np.asarray(predictions, dtype=float)
    if y.shape[0] != pred.shape[0] + 1:
        raise ValueError("need one more state sample than predictions")
    w_tilde = y[1:] - pred
    verdicts = np.max(np.abs(w_tilde), axis=1) <= eps_e + _tol(eps_e)
    return verdicts, w_tilde


def check_G_iss(e_b_samples, y_goal: float, eps_t: float, delta: float):
    """Ultimate-bound reading of the planner's convergence guarantee.

    Returns (per-sample verdicts |E_B - goal| <= eps_t + delta, K_live),
    K_live being the first index from which the bound holds at every later
    sample, or None if it never does.
    """
    e_b = np.asarray(e_b_samples, dtype=float)
    inside = np.abs(e_b - y_goal) <= eps_t + delta + _tol(eps_t + delta)
    if not inside.size:
        return inside, None
    holds_from = np.flip(np.logical_and.accumulate(np.flip(inside)))
    idx = np.flatnonzero(holds_from)
    k_live = int(idx[0]) if idx.size else None
    return inside, k_live


def vertical_compat(eps_e: float, eps_t: float, delta: float, eps_h: float) -> bool:
    """Strict cross-layer budget: eps_E + eps_T + delta < eps_H."""
    return eps_e + eps_t + delta < eps_h


@dataclass(frozen=True)
class MismatchParams:
    """Certificate inputs for the energy prediction-error bound.

    lambda_b_energy converts bus power to battery energy rate; the
    current-loop gain lambda_b_gain sets how fast the battery current
    reference error burns off within the period.
    """

    z_peak: float
    eta: float
    eps1: float  # settled voltage error bound
    eps2: float  # settled bus-rate error bound
    delta: float
    tau1: float
    tau2: float
    kappa_max: float  # peak governor reference rate
    v_nom: float
    lambda_b_energy: float
    lambda_b_gain: float
    lambda_s: float
    i_b_bar: float
    i_s_bar: float
    c_bus: float
    u_b_bar: float


@dataclass(frozen=True)
class MismatchBound:
    eps_e: float
    delta_tr_b: float
    d_ss_b: float
    delta_tr_s: float
    d_ss_s: float
    tau2: float

    @property
    def battery_channel(self) -> float:
        return self.delta_tr_b + self.d_ss_b * self.tau2

    @property
    def supercap_channel(self) -> float:
        return self.delta_tr_s + self.d_ss_s * self.tau2


def mismatch_bound_hess(p: MismatchParams) -> MismatchBound:
    """Per-period energy prediction-error bound, per channel.

    Each channel pays a fixed transit cost (worst-case maneuver: voltage
    excursion times current bound, plus the settling current integrated
    against the full bus voltage) and a settling-phase drift rate
    multiplied by the decay time. The reported eps_E is the max of the
    two channel bounds, matching the max-norm used by the mismatch clause.
    """
    excursion = p.v_nom + p.z_peak + p.eta
    delta_tr_b = (
        p.lambda_b_energy * p.i_b_bar * p.z_peak * p.tau1
        + excursion * (p.u_b_bar / p.lambda_b_gain) * (1.0 - np.exp(-p.lambda_b_gain * p.tau1))
    )
    d_ss_b = p.lambda_b_energy * p.i_b_bar * ((1.0 + p.delta) * p.eps1 + p.eta)
    delta_tr_s = (
        p.lambda_s * p.i_s_bar * (p.z_peak + p.eta) * p.tau1
        + excursion * p.c_bus * (p.kappa_max + p.z_peak) * p.tau1
    )
    d_ss_s = (
        p.lambda_s * p.i_s_bar * ((1.0 + p.delta) * p.eps1 + p.eta)
        + (p.v_nom + p.eps1 + p.eta) * p.c_bus * p.eps2
    )
    bound = MismatchBound(
        eps_e=0.0,
        delta_tr_b=float(delta_tr_b),
        d_ss_b=float(d_ss_b),
        delta_tr_s=float(delta_tr_s),
        d_ss_s=float(d_ss_s),
        tau2=p.tau2,
    )
    eps_e = max(bound.battery_channel, bound.supercap_channel)
    return MismatchBound(float(eps_e), bound.delta_tr_b, bound.d_ss_b, bound.delta_tr_s, bound.d_ss_s, p.tau2)


@dataclass(frozen=True)
class CertificateVerdicts:
    """Named well-posedness checks plus the numbers behind them."""

    admissible_disturbance: bool  # V_bar_h strictly below the tightest threshold
    vertical_compat: bool
    timing_period_covers_settling: bool
    timing_decay_window_ok: bool
    gamma_inf: float
    v_bar_h: float
    eps_e: float
    eps_t: float
    delta: float
    eps_h: float

    @property
    def all_ok(self) -> bool:
        return (
            self.admissible_disturbance
            and self.vertical_compat
            and self.timing_period_covers_settling
            and self.timing_decay_window_ok
        )


def certificate_report(
    spec: ContractSpec,
    v_bar_h: float,
    settling: SettlingTimes,
    timing: TimingVerdict,
    eps_t: float,
    mismatch: MismatchBound,
    constraints,
    P: SpdMatrix,
    v_samples,
) -> CertificateVerdicts:
    """Assemble the offline compatibility verdicts for one configuration.

    The admissibility check compares the disturbance-induced invariant
    level against the smallest governor threshold over the supplied
    reference samples; an empty constraint list leaves the threshold
    unbounded (+inf), so admissibility holds vacuously.
    """
    constraints = list(constraints)
    if constraints:
        gamma_inf = min(gamma(np.asarray(v, dtype=float), constraints, P) for v in v_samples)
    else:
        gamma_inf = float("inf")
    return CertificateVerdicts(
        admissible_disturbance=bool(v_bar_h < gamma_inf),
        vertical_compat=vertical_compat(mismatch.eps_e, eps_t, spec.delta, spec.eps_h),
        timing_period_covers_settling=timing.period_covers_settling,
        timing_decay_window_ok=timing.window_within_transit,
        gamma_inf=float(gamma_inf),
        v_bar_h=float(v_bar_h),
        eps_e=mismatch.eps_e,
        eps_t=eps_t,
        delta=spec.delta,
        eps_h=spec.eps_h,
    )
