"""Command-line orchestration: simulate, build-lax, verify, crosscheck-hm,
report.

Exit codes: 0 all checks pass, 1 verification failure, 2 usage or config
error, 3 numerical breakdown (collision, divergence).  Identical
configurations (including the seed) produce byte-identical CSV/JSON output.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import sympy

from . import report as report_mod
from .calogero import (
    CollisionError,
    ConvergenceError,
    ParticleState,
    Trajectory,
    compatibility_check,
    conservation_drift,
    default_q0,
    eom_rhs,
    first_integrals,
    governing_fields_from_state,
    governing_fields_from_trajectory,
    init_state,
    integrate,
)
from .eigenflow import (
    fp_check,
    ode_in_x_check,
    path_independence_residual,
    propagate,
    transport_pde_check,
)
from .fields import Grid2D, Polynomial, residual_norms
from .fpcore import (
    TabulatedPair,
    constraint_residuals,
    governing_residuals,
    quantum_pii_spec,
    zero_curvature_residuals,
)
from .laxbuild import (
    BuilderConfig,
    PIIPairFamily,
    PolynomialityError,
    build_pair,
    degree_audit,
)
from .pii_reference import (
    airy_ai,
    baik_rains_lax,
    particles_from_hm,
    reference_fields,
    solve_hastings_mcleod,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

# Default verification thresholds: identities with exact partials must sit at
# roundoff; stencil-based identities carry a mandatory Richardson check.
THRESHOLDS = {
    "conservation_drift": 1e-8,
    "flow_compatibility": 1e-7,
    "governing_conservation": 1e-6,
    "governing_companion": 1e-6,
    "constraint_diag": 1e-8,
    "constraint_plus": 1e-8,
    "curvature_11": 1e-6,
    "curvature_plus": 1e-6,
    "curvature_minus": 1e-6,
    "curvature_trace": 1e-6,
    "trace_law": 1e-12,
    "polynomiality_L_minus": 1e-6,
    "polynomiality_B_minus": 1e-6,
    "degree_audit": 0.5,
    "governing_conservation_fd": 1e-5,
    "governing_companion_fd": 1e-5,
    "path_independence": 1e-6,
    "fp_residual": 1e-5,
    "transport_pde": 1e-5,
    "ode_in_x": 1e-5,
}
# Schema of the verification/crosscheck JSON reports (a mapping from
# identity name to its residual record).
REPORT_SCHEMA = {
    "type": "object",
    "minProperties": 1,
    "additionalProperties": {
        "type": "object",
        "required": ["max_abs", "rms", "pass"],
        "properties": {
            "max_abs": {"type": "number"},
            "rms": {"type": "number"},
            "pass": {"type": "boolean"},
            "threshold": {"type": "number"},
            "samples": {"type": "integer", "minimum": 0},
            "worst_point": {"type": "array", "items": {"type": "number"}},
            "richardson_ratio": {"type": "number"},
            "coarse_max_abs": {"type": "number"},
            "detail": {"type": "string"},
            "skipped_times": {"type": "integer"},
        },
    },
}

RICHARDSON_MIN_RATIO = 8.0
# A refined residual this far under its threshold counts as noise-limited
# (transport/roundoff floor) rather than stencil-limited, so the halving
# ratio is not required of it.
RICHARDSON_FLOOR_FRACTION = 0.1
T_STEP = 1e-3            # stencil step for entry time derivatives

DEFAULTS = {
    "kappa": 3,
    "q0": None,
    "state": None,
    "t0": 0.0,
    "t1": 2.0,
    "tol": 1e-10,
    "grid": None,
    "phi": "1",
    "anchor": "sumP",
    "seed": None,
    "out": ".",
    "format": "csv",
    "traj": None,
    "verify_json": None,
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laxforge",
        description="Particle flows, explicit 2x2 Lax pairs and identity "
                    "verification for the rescaled soft-edge operator.")
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--kappa", type=int, help="number of particles (>= 1)")
    shared.add_argument("--q0", type=str, help="comma-separated initial coordinates")
    shared.add_argument("--state", type=str, help="JSON state snapshot to start from")
    shared.add_argument("--t0", type=float)
    shared.add_argument("--t1", type=float)
    shared.add_argument("--tol", type=float, help="integrator relative tolerance")
    shared.add_argument("--grid", type=str, help="tmin,tmax,xmin,xmax,nt,nx")
    shared.add_argument("--phi", type=str, help="gauge function of t (expression)")
    shared.add_argument("--anchor", type=str, help="sumP | sumP:VALUE | U:VALUE")
    shared.add_argument("--seed", type=int, help="jitter seed for randomized q0")
    shared.add_argument("--config", type=str, help="JSON config file (flags override)")
    shared.add_argument("--out", type=str, help="output directory")
    shared.add_argument("--format", choices=["csv", "json"], help="trajectory format")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[shared])
    sub.add_parser("build-lax", parents=[shared])
    ver = sub.add_parser("verify", parents=[shared])
    ver.add_argument("--traj", type=str,
                     help="trajectory CSV; verification re-integrates its "
                          "initial state over the recorded span")
    sub.add_parser("crosscheck-hm", parents=[shared])
    rep = sub.add_parser("report", parents=[shared])
    rep.add_argument("--traj", type=str, help="trajectory CSV to render")
    rep.add_argument("--verify-json", type=str, help="verification JSON to render")
    return parser


def merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if not isinstance(cfg["kappa"], int) or cfg["kappa"] < 1:
        raise ConfigError("kappa must be an integer >= 1")
    if not cfg["tol"] > 0:
        raise ConfigError("tol must be positive")
    parse_anchor(cfg["anchor"])
    if cfg["q0"] is not None:
        parse_q0(cfg["q0"], cfg["kappa"])
    if cfg["grid"] is not None:
        parse_grid(cfg["grid"])
    phi_config(cfg["phi"])


def parse_q0(text, kappa: int) -> tuple[complex, ...]:
    if isinstance(text, (list, tuple)):
        vals = tuple(complex(v) for v in text)
    else:
        try:
            vals = tuple(complex(tok.strip().replace(" ", "")) for tok in str(text).split(","))
        except ValueError as exc:
            raise ConfigError(f"cannot parse q0: {exc}")
    if len(vals) != kappa:
        raise ConfigError(f"q0 has {len(vals)} entries, expected kappa={kappa}")
    return vals


def parse_anchor(text) -> tuple[str, complex]:
    s = str(text)
    if s == "sumP":
        return "sumP", 0.0
    if ":" in s:
        mode, val = s.split(":", 1)
        if mode in ("sumP", "U"):
            try:
                return mode, complex(val)
            except ValueError:
                raise ConfigError(f"cannot parse anchor value: {val!r}")
    raise ConfigError("anchor must be 'sumP', 'sumP:VALUE' or 'U:VALUE'")


def parse_grid(text) -> Grid2D:
    try:
        tmin, tmax, xmin, xmax, nt, nx = [float(v) for v in str(text).split(",")]
        return Grid2D.regular(tmin, tmax, int(nt), xmin, xmax, int(nx))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse grid: {exc}")


def phi_config(text) -> BuilderConfig:
    s = str(text).strip()
    if s in ("1", "const", ""):
        return BuilderConfig()
    t = sympy.symbols("t")
    try:
        expr = sympy.parse_expr(s, local_dict={"t": t})
    except (sympy.SympifyError, SyntaxError) as exc:
        raise ConfigError(f"cannot parse phi: {exc}")
    if not expr.free_symbols <= {t}:
        raise ConfigError("phi may depend on t only")
    fval = sympy.lambdify(t, expr, modules="numpy")
    fder = sympy.lambdify(t, expr.diff(t), modules="numpy")

    def supplier(tv: float) -> tuple[complex, complex]:
        v = complex(fval(tv))
        return v, complex(fder(tv)) / v

    return BuilderConfig(phi=supplier)


def resolve_q0(cfg: dict) -> tuple[complex, ...]:
    if cfg["q0"] is not None:
        return parse_q0(cfg["q0"], cfg["kappa"])
    base = np.asarray(default_q0(cfg["kappa"]), dtype=complex)
    if cfg["seed"] is not None:
        rng = np.random.default_rng(cfg["seed"])
        base = base + 0.15 * (rng.standard_normal(len(base))
                              + 1j * rng.standard_normal(len(base)))
    return tuple(base)


def starting_state(cfg: dict) -> ParticleState:
    if cfg["state"]:
        with open(cfg["state"]) as fh:
            return ParticleState.from_json(fh.read())
    return init_state(cfg["kappa"], resolve_q0(cfg), cfg["t0"],
                      anchor=parse_anchor(cfg["anchor"]))


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("LAXFORGE_THREADS", "4")))
    except ValueError:
        return 4


# ---------------------------------------------------------------------------
# Report entries
# ---------------------------------------------------------------------------

def _entry(rep, threshold: float, **extra) -> dict:
    d = rep.as_dict()
    d["threshold"] = threshold
    d["pass"] = bool(rep.max_abs <= threshold)
    d.update(extra)
    return d


def _bool_entry(ok: bool, detail: str, samples: int = 1) -> dict:
    return {"max_abs": 0.0 if ok else 1.0, "rms": 0.0 if ok else 1.0,
            "worst_point": [0.0, 0.0], "samples": samples,
            "threshold": 0.5, "pass": bool(ok), "detail": detail}


def _failed_entry(msg: str) -> dict:
    # 1e300 stands in for "not even evaluable" while keeping the JSON strict.
    return {"max_abs": 1e300, "rms": 1e300,
            "worst_point": [0.0, 0.0], "samples": 0,
            "threshold": 0.0, "pass": False, "detail": msg}


def _richardson_entry(fine_rep, coarse_rep, threshold: float) -> dict:
    ratio = coarse_rep.max_abs / max(fine_rep.max_abs, 1e-300)
    ok = fine_rep.max_abs <= threshold and (
        ratio >= RICHARDSON_MIN_RATIO
        or fine_rep.max_abs <= RICHARDSON_FLOOR_FRACTION * threshold)
    d = fine_rep.as_dict()
    d["threshold"] = threshold
    d["pass"] = bool(ok)
    d["richardson_ratio"] = ratio
    d["coarse_max_abs"] = coarse_rep.max_abs
    return d


def _print_report(report: dict) -> None:
    for name in sorted(report):
        e = report[name]
        status = "PASS" if e["pass"] else "FAIL"
        print(f"{name}: max_abs={e['max_abs']:.3e} threshold={e['threshold']:.1e} {status}")


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: dict) -> int:
    out = _out_dir(cfg)
    s0 = starting_state(cfg)
    traj = integrate(s0, cfg["t1"], rel_tol=cfg["tol"], abs_tol=1e-13)
    drift = conservation_drift(traj)
    if cfg["format"] == "json":
        payload = {"kappa": traj.kappa,
                   "states": [json.loads(s.to_json()) for s in traj.states]}
        _write_json(out / "trajectory.json", payload)
    else:
        traj.to_csv(out / "trajectory.csv")
    (out / "state_final.json").write_text(traj.states[-1].to_json() + "\n")
    span = abs(cfg["t1"] - s0.t)
    threshold = 100.0 * cfg["tol"] * max(1.0, span)
    print(f"first-integral drift: {drift:.3e} (threshold {threshold:.1e})")
    return EXIT_OK if drift <= threshold else EXIT_FAIL


def cmd_build_lax(cfg: dict) -> int:
    out = _out_dir(cfg)
    s0 = starting_state(cfg)
    result = build_pair(s0, phi_config(cfg["phi"]))
    degrees = degree_audit(result)
    _write_json(out / "lax_pair.json", result.export_dict())
    print("degrees:", json.dumps(degrees, sort_keys=True))
    print("division remainders:",
          json.dumps({k: f"{v:.3e}" for k, v in result.remainders.items()}, sort_keys=True))
    return EXIT_OK


def _load_trajectory(cfg: dict) -> Trajectory:
    rel = min(cfg["tol"], 1e-11)
    if cfg.get("traj"):
        recorded = Trajectory.from_csv(cfg["traj"])
        if len(recorded.states) < 2:
            raise ConfigError("trajectory file must span a time interval")
        return integrate(recorded.states[0], recorded.states[-1].t,
                         rel_tol=rel, abs_tol=1e-13)
    s0 = starting_state(cfg)
    return integrate(s0, cfg["t1"], rel_tol=rel, abs_tol=1e-13)


def cmd_verify(cfg: dict) -> int:
    out = _out_dir(cfg)
    bcfg = phi_config(cfg["phi"])
    traj = _load_trajectory(cfg)
    spec = quantum_pii_spec(traj.kappa)
    t0, t1 = traj.t_start, traj.t_end
    span = abs(t1 - t0)
    margin = max(0.05 * span, 3.0 * T_STEP)
    tm0, tm1 = min(t0, t1) + margin, max(t0, t1) - margin

    pair = governing_fields_from_trajectory(traj)
    max_re_pole = max(max(q.real for q in st.Q) for st in traj.states)
    x_right = max_re_pole + 0.6

    user_grid = parse_grid(cfg["grid"]) if cfg["grid"] else None
    gov_grid = user_grid or Grid2D.regular(tm0, tm1, 40, -3.0, 3.0, 40)
    pair_grid = Grid2D.regular(tm0, tm1, 25, -2.5, 2.5, 25)
    # The tabulated route needs more clearance from the poles: its t-stencil
    # truncation grows like the sixth power of the inverse distance.
    fd_grid = Grid2D.regular(tm0, tm1, 41, max_re_pole + 1.2,
                             max_re_pole + 3.2, 41)
    flow_len = min(1.0, 0.8 * span)
    flow_grid = Grid2D.regular(tm0, tm0 + flow_len, 61, x_right, x_right + 1.0, 61)

    report: dict[str, dict] = {}

    def grp_conservation():
        c0 = first_integrals(traj.states[0])
        vals = []
        for t in traj.sample_times(50):
            c = first_integrals(traj.state_at(t))
            vals.append(((float(t), 0.0), float(np.max(np.abs(c - c0)))))
        rep = residual_norms("conservation_drift", vals)
        compat = compatibility_check(traj, 20)
        return [("conservation_drift", _entry(rep, THRESHOLDS["conservation_drift"])),
                ("flow_compatibility", _entry(compat, THRESHOLDS["flow_compatibility"]))]

    def grp_governing():
        r1, r2 = governing_residuals(spec, pair, gov_grid)
        return [("governing_conservation", _entry(r1, THRESHOLDS["governing_conservation"])),
                ("governing_companion", _entry(r2, THRESHOLDS["governing_companion"]))]

    def grp_governing_fd():
        tab = TabulatedPair.sample(pair, fd_grid)
        c1, c2 = governing_residuals(spec, tab, fd_grid)
        tab_f = TabulatedPair.sample(pair, fd_grid.refine())
        f1, f2 = governing_residuals(spec, tab_f, fd_grid.refine())
        return [("governing_conservation_fd",
                 _richardson_entry(f1, c1, THRESHOLDS["governing_conservation_fd"])),
                ("governing_companion_fd",
                 _richardson_entry(f2, c2, THRESHOLDS["governing_companion_fd"]))]

    def grp_pair():
        entries = []
        try:
            family = PIIPairFamily(traj, bcfg)
            lax = family.lax_matrices()
            cr1, cr2 = constraint_residuals(spec, lax, pair_grid)
            entries += [("constraint_diag", _entry(cr1, THRESHOLDS["constraint_diag"])),
                        ("constraint_plus", _entry(cr2, THRESHOLDS["constraint_plus"]))]
            for rep in zero_curvature_residuals(lax, pair_grid, t_step=T_STEP):
                entries.append((rep.identity_name, _entry(rep, THRESHOLDS[rep.identity_name])))
            probes = np.linspace(tm0, tm1, 7)
            worst_l = worst_b = 0.0
            trace_vals = []
            audit_msg, audit_ok = "all bounds hold", True
            for t in probes:
                res = family.result_at(float(t))
                worst_l = max(worst_l, res.remainders["L_minus"])
                worst_b = max(worst_b, res.remainders["B_minus"])
                try:
                    degree_audit(res)
                except ValueError as exc:
                    audit_ok, audit_msg = False, str(exc)
                # The trace content: L1+L2 assembles to x^2 - t exactly and
                # B1+B2 has slope -1, so both trace flatness sides equal -1.
                lt_target = Polynomial.of(-float(t), 0.0, 1.0)
                trace_vals.append(((float(t), 0.0),
                                   max((res.L_t - lt_target).inf_norm(),
                                       (res.B_t.deriv() - Polynomial.of(-1.0)).inf_norm())))
            entries.append(("polynomiality_L_minus", {
                "max_abs": worst_l, "rms": worst_l, "worst_point": [0.0, 0.0],
                "samples": len(probes), "threshold": THRESHOLDS["polynomiality_L_minus"],
                "pass": bool(worst_l <= THRESHOLDS["polynomiality_L_minus"])}))
            entries.append(("polynomiality_B_minus", {
                "max_abs": worst_b, "rms": worst_b, "worst_point": [0.0, 0.0],
                "samples": len(probes), "threshold": THRESHOLDS["polynomiality_B_minus"],
                "pass": bool(worst_b <= THRESHOLDS["polynomiality_B_minus"])}))
            entries.append(("degree_audit", _bool_entry(audit_ok, audit_msg, len(probes))))
            entries.append(("trace_law",
                            _entry(residual_norms("trace_law", trace_vals),
                                   THRESHOLDS["trace_law"])))
        except (ValueError, PolynomialityError) as exc:
            for name in ("constraint_diag", "constraint_plus", "curvature_11",
                         "curvature_plus", "curvature_minus", "curvature_trace",
                         "polynomiality_L_minus", "polynomiality_B_minus",
                         "degree_audit", "trace_law"):
                entries.append((name, _failed_entry(str(exc))))
        return entries

    def grp_flow():
        entries = []
        try:
            family = PIIPairFamily(traj, bcfg)
            lax = family.lax_matrices()
            pi = path_independence_residual(lax, flow_grid)
            entries.append(("path_independence", _entry(pi, THRESHOLDS["path_independence"])))
            coarse = propagate(lax, flow_grid)
            fine = propagate(lax, flow_grid.refine())
            entries.append(("fp_residual", _richardson_entry(
                fp_check(spec, fine), fp_check(spec, coarse), THRESHOLDS["fp_residual"])))
            entries.append(("transport_pde", _richardson_entry(
                transport_pde_check(pair, fine), transport_pde_check(pair, coarse),
                THRESHOLDS["transport_pde"])))
            entries.append(("ode_in_x", _richardson_entry(
                ode_in_x_check(spec, pair, fine), ode_in_x_check(spec, pair, coarse),
                THRESHOLDS["ode_in_x"])))
        except (ValueError, PolynomialityError, RuntimeError) as exc:
            for name in ("path_independence", "fp_residual", "transport_pde", "ode_in_x"):
                entries.append((name, _failed_entry(str(exc))))
        return entries

    groups = [grp_conservation, grp_governing, grp_governing_fd, grp_pair, grp_flow]
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(lambda g: g(), groups))
    for chunk in results:
        for name, entry in chunk:
            report[name] = entry

    _write_json(out / "verify.json", report)
    _print_report(report)
    failed = [n for n in sorted(report) if not report[n]["pass"]]
    if failed:
        print(f"FAILED identities: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_crosscheck_hm(cfg: dict) -> int:
    out = _out_dir(cfg)
    hm = solve_hastings_mcleod()
    hm.to_csv(out / "hm_table.csv")
    report: dict[str, dict] = {}

    def scalar(name, value, threshold, samples=1):
        report[name] = {"max_abs": float(value), "rms": float(value),
                        "worst_point": [0.0, 0.0], "samples": samples,
                        "threshold": threshold, "pass": bool(value <= threshold)}

    scalar("hm_ode_residual", hm.meta["ode_resid"], 1e-8)
    scalar("hm_right_asymptote", abs(hm.eval_q(4.0) / airy_ai(4.0) - 1.0), 1e-3)
    scalar("hm_left_asymptote", abs(hm.eval_q(-6.0) / np.sqrt(3.0) - 1.0), 1e-2)
    scalar("hm_u_relation",
           float(np.max(np.abs(hm.u - (hm.qprime ** 2 - hm.t_grid * hm.q ** 2 - hm.q ** 4)))),
           1e-8)

    ts = np.linspace(-2.0, 4.0, 25)
    xs = np.linspace(-6.0, 6.0, 17)
    for kappa in (1, 2):
        vals, skipped = [], 0
        eom_vals, udot_vals = [], []
        h = 1e-3
        for t in ts:
            try:
                st = particles_from_hm(kappa, hm, float(t))
            except ValueError:
                skipped += 1
                continue
            ref = reference_fields(kappa, hm, float(t))
            pf = governing_fields_from_state(st)
            poles = ref.poles_at(float(t))
            for x in xs:
                if min(abs(x - p) for p in poles) <= 0.3:
                    continue
                vals.append(((float(t), float(x)),
                             max(abs(ref.b_plus.val(t, x) - pf.b_plus.val(t, x)),
                                 abs(ref.b_1.val(t, x) - pf.b_1.val(t, x)))))
            # EOM and Udot stencil consistency through the closed forms
            try:
                sts = [particles_from_hm(kappa, hm, float(t) + k * h) for k in (-2, -1, 0, 1, 2)]
            except ValueError:
                continue
            _, pdot, udot = eom_rhs(st)
            for comp in range(kappa):
                vs = [s.Q[comp] for s in sts]
                second = (-vs[0] + 16 * vs[1] - 30 * vs[2] + 16 * vs[3] - vs[4]) / (12 * h ** 2)
                eom_vals.append(((float(t), float(comp)),
                                 abs(kappa * second - pdot[comp])))
            us = [s.U for s in sts]
            du = (us[0] - 8 * us[1] + 8 * us[3] - us[4]) / (12 * h)
            udot_vals.append(((float(t), 0.0), abs(du - udot)))
        rep = residual_norms(f"field_match_k{kappa}", vals)
        report[f"field_match_k{kappa}"] = _entry(rep, 1e-8, skipped_times=skipped)
        report[f"eom_fd_consistency_k{kappa}"] = _entry(
            residual_norms(f"eom_fd_consistency_k{kappa}", eom_vals), 1e-5)
        report[f"udot_fd_consistency_k{kappa}"] = _entry(
            residual_norms(f"udot_fd_consistency_k{kappa}", udot_vals), 1e-5)

        spec = quantum_pii_spec(kappa)
        grid = Grid2D.regular(-2.0, 4.0, 13, 2.8, 6.2, 11, exclusion_radius=0.3)
        ref_pair = reference_fields(kappa, hm, 0.0)
        g1, g2 = governing_residuals(spec, ref_pair, grid)
        report[f"governing_reference_k{kappa}"] = _entry(
            residual_norms(f"governing_reference_k{kappa}",
                           [((0.0, 0.0), max(g1.max_abs, g2.max_abs))]), 1e-6)

    br_grid = Grid2D.regular(-2.0, 4.0, 13, -3.0, 3.0, 13)
    worst = max(r.max_abs for r in zero_curvature_residuals(baik_rains_lax(hm), br_grid))
    scalar("baik_rains_curvature", worst, 1e-6, samples=br_grid.shape[0] * br_grid.shape[1])

    _write_json(out / "crosscheck.json", report)
    _print_report(report)
    failed = [n for n in sorted(report) if not report[n]["pass"]]
    if failed:
        print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_report(cfg: dict) -> int:
    out = _out_dir(cfg)
    wrote = []
    if cfg.get("traj"):
        traj = Trajectory.from_csv(cfg["traj"])
    else:
        traj = _load_trajectory(cfg)
    wrote += report_mod.render_trajectory_figure(traj, out)
    if cfg.get("verify_json"):
        wrote += report_mod.render_residual_figure(cfg["verify_json"], out)
    for p in wrote:
        print(f"wrote {p}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "build-lax": cmd_build_lax,
    "verify": cmd_verify,
    "crosscheck-hm": cmd_crosscheck_hm,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merge_config(args)
    except ConfigError as exc:
        parser.error(str(exc))  # exits 2
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CollisionError, ConvergenceError) as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PolynomialityError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
