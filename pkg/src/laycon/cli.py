"""Command-line surface: certify and run pipelines, CSV/JSON emission.

Configs are strict JSON documents (no comments). `laycon certify` computes
the complete offline certificate chain and writes certificate.json;
`laycon run` simulates one seeded scenario and writes trajectory.csv,
monitor.json, and summary.json; `laycon sweep` fans independent seeds
across processes and aggregates invariance evidence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .contracts import certificate_report, mismatch_bound_hess
from .erg import ErgConfig, GammaEvaluator
from .hess import HessParams, LoadProfile, LoadSegment, hess_constraints
from .iss_cert import (
    IssCertificate,
    coordinate_bound,
    iss_gain,
    noise_floor,
    settling_time,
    timing_check,
    ultimate_level_optimized,
)
from .mpc import PlannerConfig, PlannerIssData, estimate_lipschitz, planner_iss_bound
from .numkit import SpdMatrix, decay_rate, solve_lyapunov
from .scenarios import CertificateInputs, RunBundle, mismatch_params_for, scenario_a, scenario_b
from .sim import (
    SimConfig,
    TrajectoryLog,
    calibrated_overshoot_for_run,
    invariant_violations,
    omega_entry_time,
    run_layered,
)

TRAJECTORY_HEADER = (
    "t,V_gr,I_S,I_B,E_S,E_B,v,r_V,r_IB,e1,e2,V_e,Gamma_v,Phi,w,d,u_S,u_B,fallback"
)


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def dump_json(obj, path: Path) -> None:
    path.write_text(
        json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
        encoding="utf-8",
    )


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path}: {message}")


# ---------------------------------------------------------------------------
# config <-> bundle


def bundle_to_config(bundle: RunBundle) -> dict:
    """Serialize a run bundle into the JSON config schema."""
    plant = bundle.plant
    sim = bundle.sim
    cert = bundle.cert
    cfg = {
        "scenario": bundle.name,
        "plant": {
            "c_bus": plant.c_bus, "v_nom": plant.v_nom, "k1": plant.k1, "k2": plant.k2,
            "lambda_b_gain": plant.lambda_b_gain, "lambda_b_energy": plant.lambda_b_energy,
            "lambda_s": plant.lambda_s, "v_min": plant.v_min, "v_max": plant.v_max,
            "i_s_bar": plant.i_s_bar, "i_b_bar": plant.i_b_bar,
            "u_s_bar": plant.u_s_bar, "u_b_bar": plant.u_b_bar, "rho_d": plant.rho_d,
        },
        "lyapunov_weight": np.asarray(bundle.R).tolist(),
        "constraints": {"mode": _constraint_mode(bundle), "kappa_bar": 0.0,
                        "d_bar_max": 0.0, "d_bar_dot_max": 0.0},
        "erg": {"kappa_erg": bundle.erg_cfg.kappa_erg, "eta": bundle.erg_cfg.eta,
                "eta_rep": list(bundle.erg_cfg.eta_rep)},
        "planner": None if bundle.planner_cfg is None else {
            "horizon": bundle.planner_cfg.horizon,
            "q_weight": bundle.planner_cfg.q_weight,
            "e_b_goal": bundle.planner_cfg.e_b_goal,
            "e_b_range": list(bundle.planner_cfg.e_b_range),
            "e_s_range": list(bundle.planner_cfg.e_s_range),
            "tighten_eps_e": bundle.planner_cfg.tighten_eps_e,
        },
        "contract": {
            "eps_e": bundle.spec.eps_e, "eps_t": bundle.spec.eps_t,
            "eps_l": list(bundle.spec.eps_l), "eps_h": bundle.spec.eps_h,
            "delta": bundle.spec.delta, "y_goal": bundle.spec.y_goal,
            "u_bounds": list(bundle.spec.u_bounds),
        },
        "sim": {
            "t_end": sim.t_end, "t_s": sim.t_s, "h": sim.h, "seed": sim.seed,
            "disturbance": sim.disturbance, "w_max": sim.w_max,
            "erg_on": sim.erg_on, "mpc_on": sim.mpc_on,
            "frozen_reference": list(sim.frozen_reference) if sim.frozen_reference else None,
            "x0": list(sim.x0), "v0": list(sim.v0) if sim.v0 else None,
            "r_init_ib": sim.r_init_ib,
        },
        "load": _load_to_config(bundle.load_profile),
        "certificates": {
            "m_overshoot": cert.m_overshoot, "h_max": cert.h_max,
            "v_bar_h_override": cert.v_bar_h_override,
            "kappa_lo": cert.kappa_lo, "r_lo": cert.r_lo,
            "settle_delta": cert.settle_delta, "settle_mode": cert.settle_mode,
            "ff_residual_bound": cert.ff_residual_bound, "eta": cert.eta,
            "lambda_min_p": cert.lambda_min_p, "lambda_max_p": cert.lambda_max_p,
            "lambda_min_q": cert.lambda_min_q, "l_v": cert.l_v,
        },
    }
    return cfg


def _constraint_mode(bundle: RunBundle) -> str:
    labels = {c.label for c in bundle.constraints}
    if labels == {"u_s_upper", "u_s_lower"}:
        return "input_only"
    if all(lab.startswith("v_") for lab in labels):
        return "voltage_only"
    return "full"


def _load_to_config(profile: LoadProfile | None):
    if profile is None:
        return None
    segs = []
    for s in profile.segments:
        segs.append([s.t_start, s.t_end, s.kind, s.level_start, s.level_end])
    return {"segments": segs, "osc_amplitude": profile.osc_amplitude,
            "osc_freq_hz": profile.osc_freq_hz}


def _require(section: dict, key: str, path: str):
    if key not in section:
        raise ConfigError(f"{path}.{key}", "missing required key")
    return section[key]


def load_bundle(cfg: dict) -> RunBundle:
    """Build a run bundle from a config dict, reporting the offending key
    path on validation failure."""
    try:
        plant = HessParams(**cfg.get("plant", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError("plant", str(exc)) from None
    try:
        R = np.asarray(_require(cfg, "lyapunov_weight", "config"), dtype=float)
        P = solve_lyapunov(plant.error_matrix(), R)
    except ValueError as exc:
        raise ConfigError("lyapunov_weight", str(exc)) from None

    con_cfg = cfg.get("constraints", {"mode": "full"})
    mode = con_cfg.get("mode", "full")
    try:
        if mode == "voltage_only":
            constraints = [c for c in hess_constraints(plant) if c.label.startswith("v_")]
        else:
            constraints = hess_constraints(
                plant, erg_mode=mode,
                kappa_bar=con_cfg.get("kappa_bar", 0.0),
                d_bar_max=con_cfg.get("d_bar_max", 0.0),
                d_bar_dot_max=con_cfg.get("d_bar_dot_max", 0.0),
            )
    except ValueError as exc:
        raise ConfigError("constraints.mode", str(exc)) from None

    try:
        erg_section = dict(cfg.get("erg", {}))
        if "eta_rep" in erg_section:
            erg_section["eta_rep"] = tuple(erg_section["eta_rep"])
        erg_cfg = ErgConfig(**erg_section)
    except (TypeError, ValueError) as exc:
        raise ConfigError("erg", str(exc)) from None

    try:
        sim_section = dict(_require(cfg, "sim", "config"))
        for key in ("frozen_reference", "x0", "v0"):
            if sim_section.get(key) is not None:
                sim_section[key] = tuple(sim_section[key])
        sim = SimConfig(**sim_section)
    except (TypeError, ValueError) as exc:
        raise ConfigError("sim", str(exc)) from None

    planner_cfg = None
    if cfg.get("planner") is not None:
        section = cfg["planner"]
        try:
            planner_cfg = PlannerConfig.from_hess(
                plant,
                horizon=_require(section, "horizon", "planner"),
                t_s=sim.t_s,
                q_weight=_require(section, "q_weight", "planner"),
                e_b_goal=_require(section, "e_b_goal", "planner"),
                e_b_range=_require(section, "e_b_range", "planner"),
                e_s_range=_require(section, "e_s_range", "planner"),
                tighten_eps_e=section.get("tighten_eps_e", 0.0),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("planner", str(exc)) from None

    from .contracts import ContractSpec
    from .hess import battery_interface_bounds

    con = cfg.get("contract", {})
    try:
        r_bar_b = (planner_cfg.slew_bound if planner_cfg
                   else battery_interface_bounds(plant, sim.t_s)[0])
        spec = ContractSpec(
            eps_e=con.get("eps_e", 0.5),
            eps_t=con.get("eps_t", 0.2),
            eps_l=tuple(con.get("eps_l", (0.3, battery_interface_bounds(plant, sim.t_s)[1]))),
            eps_h=con.get("eps_h", 1.0),
            r_bar=(0.0, r_bar_b),
            w_max=sim.w_max,
            t_s=sim.t_s,
            delta=con.get("delta", 0.1),
            v_box=(plant.v_min, plant.v_max),
            i_s_box=(-plant.i_s_bar, plant.i_s_bar),
            i_b_box=(-plant.i_b_bar, plant.i_b_bar),
            u_bounds=tuple(con.get("u_bounds", (plant.u_s_bar, plant.u_b_bar))),
            y_goal=con.get("y_goal", planner_cfg.e_b_goal if planner_cfg else 0.0),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("contract", str(exc)) from None

    profile = None
    if cfg.get("load") is not None:
        section = cfg["load"]
        try:
            segments = []
            for row in _require(section, "segments", "load"):
                t0, t1, kind, level_start = row[0], row[1], row[2], row[3]
                level_end = row[4] if len(row) > 4 else 0.0
                segments.append(LoadSegment(t0, t1, kind, level_start, level_end))
            profile = LoadProfile(
                segments=tuple(segments),
                osc_amplitude=section.get("osc_amplitude", 0.0),
                osc_freq_hz=section.get("osc_freq_hz", 0.0),
            )
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError("load.segments", str(exc)) from None

    cert_section = cfg.get("certificates", {})
    try:
        cert = CertificateInputs(
            m_overshoot=cert_section.get("m_overshoot", 1.5),
            h_max=cert_section.get("h_max") or sim.w_max / plant.c_bus,
            v_bar_h_override=cert_section.get("v_bar_h_override"),
            kappa_lo=cert_section.get("kappa_lo", 1.0),
            r_lo=cert_section.get("r_lo", 1.0),
            settle_delta=cert_section.get("settle_delta", 0.1),
            settle_mode=cert_section.get("settle_mode", "relative"),
            ff_residual_bound=cert_section.get("ff_residual_bound", 0.0),
            eta=cert_section.get("eta", 0.01),
            lambda_min_p=cert_section.get("lambda_min_p", 1.0),
            lambda_max_p=cert_section.get("lambda_max_p", 1.0),
            lambda_min_q=cert_section.get("lambda_min_q", 1.0),
            l_v=cert_section.get("l_v"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("certificates", str(exc)) from None

    return RunBundle(
        name=cfg.get("scenario", "custom"),
        plant=plant, R=R, P=P, constraints=constraints, erg_cfg=erg_cfg,
        planner_cfg=planner_cfg, spec=spec, sim=sim, load_profile=profile, cert=cert,
    )


def read_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(path, f"cannot read: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_config(scenario: str | None, config_path: str | None) -> dict:
    if scenario not in ("a", "b", "custom", None):
        raise ConfigError("scenario", f"unknown scenario {scenario!r} (expected a, b, or custom)")
    if scenario in ("a", "b"):
        base = bundle_to_config(scenario_a() if scenario == "a" else scenario_b())
        if config_path:
            base = _merge(base, read_config(config_path))
        return base
    if config_path is None:
        raise ConfigError("config", "custom scenario requires --config")
    return read_config(config_path)


# ---------------------------------------------------------------------------
# certify


def build_certificate(bundle: RunBundle) -> dict:
    """Run the full offline certificate chain for one configuration."""
    plant, cert = bundle.plant, bundle.cert
    A = plant.error_matrix()
    P = bundle.P
    lam_e = decay_rate(A)
    eigenvalues = sorted(np.linalg.eigvals(A).real, reverse=True)
    B_norm = 1.0 / plant.c_bus

    v_bar_opt, theta_star, z_star = ultimate_level_optimized(
        P, SpdMatrix(bundle.R), np.array([0.0, 1.0]), cert.h_max
    )
    v_bar_h = cert.v_bar_h_override if cert.v_bar_h_override is not None else v_bar_opt
    eps_l = [coordinate_bound(P, v_bar_h, i) for i in range(2)]

    iss = IssCertificate(
        lambda_e=lam_e,
        m=cert.m_overshoot,
        gamma_iss=iss_gain(cert.m_overshoot, B_norm, lam_e),
        epsilon=noise_floor(iss_gain(cert.m_overshoot, B_norm, lam_e), cert.h_max),
        V_bar_h=float(v_bar_h),
        theta_star=float(theta_star),
        z_star=(float(z_star[0]), float(z_star[1])),
    )
    r_bar_b = bundle.spec.r_bar[1]
    settling = settling_time(
        m=iss.m, lambda_e=iss.lambda_e, gamma_iss=iss.gamma_iss, r_bar=r_bar_b,
        eps=iss.epsilon, kappa_lo=bundle.erg_cfg.kappa_lo * cert.kappa_lo,
        r_lo=cert.r_lo, delta=cert.settle_delta, H_max=cert.h_max,
        M=cert.ff_residual_bound, mode=cert.settle_mode,
    )
    timing = timing_check(bundle.spec.t_s, settling)

    if cert.l_v is not None:
        l_v = cert.l_v
    elif bundle.planner_cfg is not None:
        l_v = estimate_lipschitz(bundle.planner_cfg, sample_count=200, sample_radius=0.5, seed=0)
    else:
        l_v = 0.0
    iss_data = PlannerIssData(cert.lambda_min_p, cert.lambda_max_p, l_v, cert.lambda_min_q)

    gam = GammaEvaluator(bundle.constraints, P)
    v_nominal = np.array(bundle.sim.v0 if bundle.sim.v0 else (plant.v_nom, 0.0))
    gamma_star = gam.gamma(v_nominal)
    mismatch = mismatch_bound_hess(mismatch_params_for(
        bundle, z_peak=settling.z_peak, tau1=settling.tau1, tau2=settling.tau2,
        eps1=eps_l[0], eps2=eps_l[1], gamma_star=gamma_star,
    ))
    eps_t = planner_iss_bound(iss_data, mismatch.eps_e)

    verdicts = certificate_report(
        bundle.spec, v_bar_h, settling, timing, eps_t, mismatch,
        bundle.constraints, P, [v_nominal],
    )
    return {
        "P": P.mat.tolist(),
        "eigenvalues": [float(x) for x in eigenvalues],
        "kappa_P": P.cond(),
        "lambda_e": lam_e,
        "V_bar_h": iss.V_bar_h,
        "V_bar_h_optimized": float(v_bar_opt),
        "theta_star_deg": math.degrees(iss.theta_star),
        "z_star": list(iss.z_star),
        "eps_L": [float(x) for x in eps_l],
        "gamma_iss": iss.gamma_iss,
        "eps": iss.epsilon,
        "tau1": settling.tau1,
        "tau2": settling.tau2,
        "tau_LL": settling.tau_LL,
        "tau1_max": settling.tau1_max,
        "z_peak": settling.z_peak,
        "L_V": l_v,
        "eps_T": eps_t,
        "eps_E": mismatch.eps_e,
        "delta_tr_B": mismatch.delta_tr_b,
        "d_ss_B": mismatch.d_ss_b,
        "delta_tr_S": mismatch.delta_tr_s,
        "d_ss_S": mismatch.d_ss_s,
        "timing_period_covers_settling": verdicts.timing_period_covers_settling,
        "timing_decay_window_ok": verdicts.timing_decay_window_ok,
        "vertical_compat": verdicts.vertical_compat,
        "admissibility": verdicts.admissible_disturbance,
        "gamma_inf": verdicts.gamma_inf if math.isfinite(verdicts.gamma_inf) else None,
        "all_ok": verdicts.all_ok,
    }


def cmd_certify(args) -> int:
    try:
        cfg = resolve_config(args.scenario, args.config)
        bundle = load_bundle(cfg)
        certificate = build_certificate(bundle)
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "certificate.json"
    dump_json(certificate, path)
    print(f"wrote {path}")
    for key in ("admissibility", "vertical_compat",
                "timing_period_covers_settling", "timing_decay_window_ok"):
        print(f"  {key}: {certificate[key]}")
    return 0 if certificate["all_ok"] else 2


# ---------------------------------------------------------------------------
# run


def write_trajectory_csv(log: TrajectoryLog, path: Path) -> None:
    """Full-precision decimal rendering; parsing reproduces the arrays exactly."""
    cols = log.columns
    names = TRAJECTORY_HEADER.split(",")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        data = [cols[name] for name in names]
        for i in range(log.n_rows):
            writer.writerow([repr(float(col[i])) for col in data])


def read_trajectory_csv(path: Path) -> dict[str, np.ndarray]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows)
    return {name: data[:, j] for j, name in enumerate(names)}


def summarize_run(bundle: RunBundle, log: TrajectoryLog, report) -> dict:
    cert = bundle.cert
    if cert.v_bar_h_override is not None:
        v_bar_h = cert.v_bar_h_override
    else:
        v_bar_h, _, _ = ultimate_level_optimized(
            bundle.P, SpdMatrix(bundle.R), np.array([0.0, 1.0]), cert.h_max
        )
    entry = omega_entry_time(log, v_bar_h)
    safety = report.violation_counts().get("G_safe", 0)
    max_w_tilde = float(np.max(np.abs(log.w_tilde))) if log.w_tilde.size else 0.0
    return {
        "K_live": report.k_live,
        "max_Phi": float(np.max(log.columns["Phi"])),
        "max_V_e": float(np.max(log.columns["V_e"])),
        "omega_h_entry_time": entry,
        "max_w_tilde": max_w_tilde,
        "V_bar_h": float(v_bar_h),
        "invariant_violations_after_entry": invariant_violations(log, v_bar_h),
        "safety_violations": int(safety),
        "fallback_count": int(log.fallback_steps.sum()),
    }


def monitor_to_dict(report) -> dict:
    return {
        "verdicts": {k: [int(b) for b in v] for k, v in report.verdicts.items()},
        "first_violation": dict(report.first_violation),
        "w_tilde": report.w_tilde.tolist(),
        "k_live": report.k_live,
        "all_pass": report.all_pass(),
    }


def execute_run(cfg: dict, seed: int | None = None):
    if seed is not None:
        cfg = _merge(cfg, {"sim": {"seed": seed}})
    bundle = load_bundle(cfg)
    log, report = run_layered(
        bundle.plant, bundle.planner_cfg, bundle.erg_cfg, bundle.spec,
        bundle.sim, bundle.constraints, bundle.P, bundle.load_profile,
    )
    return bundle, log, report


def cmd_run(args) -> int:
    try:
        cfg = resolve_config(args.scenario, args.config)
        bundle, log, report = execute_run(cfg, args.seed)
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(log, out_dir / "trajectory.csv")
    dump_json(monitor_to_dict(report), out_dir / "monitor.json")
    summary = summarize_run(bundle, log, report)
    dump_json(summary, out_dir / "summary.json")
    print(f"wrote {out_dir}/trajectory.csv, monitor.json, summary.json")
    for key in ("K_live", "max_Phi", "max_V_e", "omega_h_entry_time",
                "safety_violations", "fallback_count"):
        print(f"  {key}: {summary[key]}")
    return 0 if summary["safety_violations"] == 0 else 1


# ---------------------------------------------------------------------------
# sweep


def _sweep_worker(payload):
    cfg, seed = payload
    bundle, log, report = execute_run(cfg, seed)
    lam_e = decay_rate(bundle.plant.error_matrix())
    m, _ = calibrated_overshoot_for_run(log, lam_e, 1.0 / bundle.plant.c_bus, bundle.sim.w_max)
    summary = summarize_run(bundle, log, report)
    return {
        "seed": seed,
        "phi_violations": int(np.sum(log.columns["Phi"] > 1e-9)),
        "invariant_violations": summary["invariant_violations_after_entry"],
        "safety_violations": summary["safety_violations"],
        "m_calibrated": m,
    }


def cmd_sweep(args) -> int:
    if args.seeds < 1:
        print("seed count must be at least 1", file=sys.stderr)
        return 1
    try:
        cfg = resolve_config(args.scenario, args.config)
        load_bundle(cfg)  # validate before fanning out
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    payloads = [(cfg, seed) for seed in range(args.seeds)]
    if args.seeds == 1:
        results = [_sweep_worker(payloads[0])]
    else:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_sweep_worker, payloads))
    results.sort(key=lambda r: r["seed"])
    ms = [r["m_calibrated"] for r in results]
    aggregate = {
        "seeds": args.seeds,
        "phi_violation_total": sum(r["phi_violations"] for r in results),
        "invariant_violation_total": sum(r["invariant_violations"] for r in results),
        "safety_violation_total": sum(r["safety_violations"] for r in results),
        "m_values": ms,
        "m_min": min(ms),
        "m_max": max(ms),
        "m_mean": sum(ms) / len(ms),
        "per_seed": results,
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "aggregate.json"
    dump_json(aggregate, path)
    print(f"wrote {path}")
    print(f"  phi_violation_total: {aggregate['phi_violation_total']}")
    print(f"  m range: [{aggregate['m_min']:.3f}, {aggregate['m_max']:.3f}]")
    bad = aggregate["phi_violation_total"] + aggregate["safety_violation_total"]
    return 0 if bad == 0 else 1


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="laycon",
        description="Layered MPC/ERG/ISS control: certificates, seeded runs, sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cert = sub.add_parser("certify", help="compute the offline certificate chain")
    p_cert.add_argument("--config", help="JSON config path")
    p_cert.add_argument("--scenario", default="custom")
    p_cert.add_argument("--out", default=".", help="output directory")
    p_cert.set_defaults(func=cmd_certify)

    p_run = sub.add_parser("run", help="simulate one seeded scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--config", help="JSON config path (overrides scenario defaults)")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="seeded Monte-Carlo invariance sweep")
    p_sweep.add_argument("--scenario", default="a")
    p_sweep.add_argument("--config", help="JSON config path")
    p_sweep.add_argument("--seeds", type=int, required=True)
    p_sweep.add_argument("--out", default=".", help="output directory")
    p_sweep.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
