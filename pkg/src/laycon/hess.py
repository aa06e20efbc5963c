"""Hybrid battery/supercapacitor storage plant and its low-level controllers.

State is (V_gr, I_S, I_B, E_S, E_B): DC bus voltage, supercapacitor and
battery currents, and their accumulated energies. The battery current is
regulated by a proportional loop toward the planner's current reference;
the supercapacitor regulates bus voltage with disturbance-cancelling PD
feedback. The module also builds the governor's constraint library and
the battery-side interface bounds that tie the current loop to the
planner's slew limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .erg import HalfspaceConstraint
from .numkit import NotHurwitzError, decay_rate


class OutOfSpanError(ValueError):
    """Load profile evaluated outside its time span."""


@dataclass(frozen=True)
class HessParams:
    """Plant constants, controller gains, and operating bounds.

    lambda_b_energy and lambda_s convert bus power to stored energy rate
    (defaulting to 1/V_nom so energies read in ampere-seconds at nominal
    voltage); lambda_b_gain is the battery current-loop gain and must
    exceed the voltage-loop decay rate so the current settles well within
    each sampling period.
    """

    c_bus: float = 1.0
    v_nom: float = 400.0
    k1: float = 35.0
    k2: float = 12.0
    lambda_b_gain: float = 50.0
    lambda_b_energy: float = 1.0 / 400.0
    lambda_s: float = 1.0 / 400.0
    v_min: float = 380.0
    v_max: float = 420.0
    i_s_bar: float = 12.0
    i_b_bar: float = 5.0
    u_s_bar: float = 50.0
    u_b_bar: float = 30.0
    rho_d: float = 5.0

    def __post_init__(self):
        for name in ("c_bus", "v_nom", "k1", "k2", "lambda_b_gain", "lambda_b_energy",
                     "lambda_s", "i_s_bar", "i_b_bar", "u_s_bar", "u_b_bar"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        lam_e = decay_rate(self.error_matrix())  # raises NotHurwitzError for bad gains
        if self.lambda_b_gain <= lam_e:
            raise ValueError(
                f"battery loop gain {self.lambda_b_gain} must exceed the "
                f"voltage-loop decay rate {lam_e:.3f}"
            )

    def error_matrix(self) -> np.ndarray:
        return np.array([[0.0, 1.0], [-self.k1, -self.k2]])


@dataclass
class HessState:
    v_gr: float
    i_s: float
    i_b: float
    e_s: float
    e_b: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v_gr, self.i_s, self.i_b, self.e_s, self.e_b])

    @classmethod
    def from_array(cls, x) -> "HessState":
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class LoadSegment:
    """One piece of the load profile: constant level or a cubic ramp
    (zero slope at both ends, so joins with constant neighbours are C^1)."""

    t_start: float
    t_end: float
    kind: str  # "constant" | "cubic-ramp"
    level_start: float
    level_end: float = 0.0

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValueError("segment must have positive duration")
        if self.kind not in ("constant", "cubic-ramp"):
            raise ValueError(f"unknown segment kind {self.kind!r}")


@dataclass(frozen=True)
class LoadProfile:
    """Piecewise C^1 load d(t) with an optional superimposed sinusoid."""

    segments: tuple[LoadSegment, ...]
    osc_amplitude: float = 0.0
    osc_freq_hz: float = 0.0

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("load profile needs at least one segment")
        for a, b in zip(segs, segs[1:]):
            if abs(a.t_end - b.t_start) > 1e-12:
                raise ValueError("segments must be contiguous")
        object.__setattr__(self, "segments", segs)

    @property
    def t_span(self) -> tuple[float, float]:
        return self.segments[0].t_start, self.segments[-1].t_end


def scenario_b_load(t_end: float = 6.0) -> LoadProfile:
    """Default time-varying load: 0 A, cubic ramp to -5 A over [0.5, 0.8] s,
    then constant, with a 0.5 A / 2 Hz ripple throughout."""
    return LoadProfile(
        segments=(
            LoadSegment(0.0, 0.5, "constant", 0.0),
            LoadSegment(0.5, 0.8, "cubic-ramp", 0.0, -5.0),
            LoadSegment(0.8, t_end, "constant", -5.0),
        ),
        osc_amplitude=0.5,
        osc_freq_hz=2.0,
    )


def load(t: float, profile: LoadProfile) -> tuple[float, float]:
    """Load value and exact derivative at time t."""
    t0, t1 = profile.t_span
    if t < t0 - 1e-12 or t > t1 + 1e-12:
        raise OutOfSpanError(f"t={t} outside load profile span [{t0}, {t1}]")
    t = min(max(t, t0), t1)
    seg = profile.segments[-1]
    for s in profile.segments:
        if t <= s.t_end:
            seg = s
            break
    if seg.kind == "constant":
        d, d_dot = seg.level_start, 0.0
    else:
        dur = seg.t_end - seg.t_start
        s_rel = (t - seg.t_start) / dur
        rise = seg.level_end - seg.level_start
        d = seg.level_start + rise * (3.0 * s_rel**2 - 2.0 * s_rel**3)
        d_dot = rise * 6.0 * (s_rel - s_rel**2) / dur
    if profile.osc_amplitude != 0.0:
        omega = 2.0 * np.pi * profile.osc_freq_hz
        d += profile.osc_amplitude * np.sin(omega * t)
        d_dot += profile.osc_amplitude * omega * np.cos(omega * t)
    return float(d), float(d_dot)


def plant_rhs(x, u, w: float, d: float, p: HessParams) -> np.ndarray:
    """Continuous-time plant derivative for state (V_gr, I_S, I_B, E_S, E_B)."""
    v_gr, i_s, i_b = x[0], x[1], x[2]
    u_s, u_b = u
    return np.array([
        (i_s + i_b + d) / p.c_bus,
        u_s + w,
        u_b,
        p.lambda_s * v_gr * i_s,
        p.lambda_b_energy * v_gr * i_b,
    ])


def control_uB(i_b: float, i_b_ref: float, lambda_b_gain: float) -> float:
    """Proportional battery current loop; converges exponentially at the gain rate."""
    return -lambda_b_gain * (i_b - i_b_ref)


def control_uS(v_gr: float, i_s: float, v: float, d_bar: float, d_bar_dot: float, p: HessParams) -> float:
    """Supercapacitor input: proportional voltage feedback, damping on the
    bus current balance, and cancellation of the known load rate."""
    return -p.c_bus * p.k1 * (v_gr - v) - p.k2 * (i_s + d_bar) - d_bar_dot


def error_state(x, v: float, v_dot: float, d_bar: float, p: HessParams) -> np.ndarray:
    """Voltage-loop tracking error: (V_gr - v, bus-rate error)."""
    return np.array([x[0] - v, (x[1] + d_bar) / p.c_bus - v_dot])


def error_matrices(p: HessParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-loop error dynamics (A, B, B_v): de = A e + B w - B_v psi."""
    A = p.error_matrix()
    if np.max(np.linalg.eigvals(A).real) >= 0.0:
        raise NotHurwitzError("voltage-loop gains do not stabilize the error dynamics")
    B = np.array([0.0, 1.0 / p.c_bus])
    B_v = np.array([0.0, 1.0])
    return A, B, B_v


def hess_constraints(
    p: HessParams,
    erg_mode: str = "full",
    kappa_bar: float = 0.0,
    d_bar_max: float = 0.0,
    d_bar_dot_max: float = 0.0,
) -> list[HalfspaceConstraint]:
    """Governor constraint rows in error coordinates.

    "full" emits the six half-spaces: the voltage box (coupled to the
    reference), the supercapacitor current limit (margin reserved for the
    worst-case load and governor rate, the latter through the threshold
    itself), and the actuator limit on the supercapacitor input.
    "input_only" emits just the actuator pair with no threshold coupling,
    the configuration whose bottleneck value is reported for the full-stack
    scenario.
    """
    k2_eff = p.k2 * p.c_bus
    u_s_eff = p.u_s_bar - d_bar_dot_max / p.c_bus
    input_rows = [
        HalfspaceConstraint(
            c_a=(p.k1,), c_b=(k2_eff,), d0=u_s_eff, c_v=(0.0, 0.0),
            g_gamma=(k2_eff * kappa_bar if erg_mode == "full" else 0.0),
            label="u_s_upper",
        ),
        HalfspaceConstraint(
            c_a=(-p.k1,), c_b=(-k2_eff,), d0=u_s_eff, c_v=(0.0, 0.0),
            g_gamma=(k2_eff * kappa_bar if erg_mode == "full" else 0.0),
            label="u_s_lower",
        ),
    ]
    if erg_mode == "input_only":
        return input_rows
    if erg_mode != "full":
        raise ValueError(f"unknown erg_mode {erg_mode!r}")
    i_s_eff = p.i_s_bar - d_bar_max
    return [
        HalfspaceConstraint(c_a=(1.0,), c_b=(0.0,), d0=p.v_max, c_v=(1.0, 0.0), label="v_max"),
        HalfspaceConstraint(c_a=(-1.0,), c_b=(0.0,), d0=-p.v_min, c_v=(-1.0, 0.0), label="v_min"),
        HalfspaceConstraint(
            c_a=(0.0,), c_b=(p.c_bus,), d0=i_s_eff, c_v=(0.0, 0.0),
            g_gamma=p.c_bus * kappa_bar, label="i_s_upper",
        ),
        HalfspaceConstraint(
            c_a=(0.0,), c_b=(-p.c_bus,), d0=i_s_eff, c_v=(0.0, 0.0),
            g_gamma=p.c_bus * kappa_bar, label="i_s_lower",
        ),
    ] + input_rows


def battery_interface_bounds(p: HessParams, t_s: float) -> tuple[float, float]:
    """Slew capacity and residual of the battery current loop over one period.

    Returns (r_bar_b, eps_l_ib): the largest admissible per-period
    reference step and the worst-case leftover current error at the next
    sample. Their sum is identically u_b_bar / lambda_b_gain, which is the
    induction invariant keeping the loop inside its saturation budget.
    """
    if t_s < 0.0:
        raise ValueError("sampling period must be nonnegative")
    budget = p.u_b_bar / p.lambda_b_gain
    decay = np.exp(-p.lambda_b_gain * t_s)
    return budget * (1.0 - decay), budget * decay


def outputs(x) -> tuple[np.ndarray, np.ndarray]:
    """Tracked fast outputs (V_gr, I_B) and sampled slow outputs (E_B, E_S)."""
    return np.array([x[0], x[2]]), np.array([x[4], x[3]])
