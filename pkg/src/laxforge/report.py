"""Figure rendering for the report path.

Renders matplotlib figures to files next to the delimited data they are
drawn from, so a report directory is self-contained: every PNG has a CSV
(or the verification JSON) carrying the plotted numbers.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .calogero import Trajectory, first_integrals

_FIG_KW = {"dpi": 150, "bbox_inches": "tight"}


def render_trajectory_figure(traj: Trajectory, out_dir) -> list[Path]:
    """Coordinate traces and first-integral drift, PNG + drift CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ts = np.array([s.t for s in traj.states])
    Q = np.array([s.Q for s in traj.states])
    P = np.array([s.P for s in traj.states])

    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for k in range(traj.kappa):
        axes[0, 0].plot(ts, Q[:, k].real, label=f"Q_{k+1}")
        axes[0, 1].plot(ts, Q[:, k].imag)
        axes[1, 0].plot(ts, P[:, k].real)
        axes[1, 1].plot(ts, P[:, k].imag)
    axes[0, 0].set_ylabel("Re Q")
    axes[0, 1].set_ylabel("Im Q")
    axes[1, 0].set_ylabel("Re P")
    axes[1, 1].set_ylabel("Im P")
    for ax in axes[1]:
        ax.set_xlabel("t")
    axes[0, 0].legend(loc="best", fontsize=8)
    fig.suptitle(f"particle flow, kappa={traj.kappa}")
    traj_png = out / "trajectory.png"
    fig.savefig(traj_png, **_FIG_KW)
    plt.close(fig)

    c0 = first_integrals(traj.states[0])
    if traj.dense is not None:
        probe_states = [traj.state_at(t) for t in traj.sample_times(60)]
    else:
        probe_states = list(traj.states)
    probe = [s.t for s in probe_states]
    drift = [float(np.max(np.abs(first_integrals(s) - c0))) for s in probe_states]
    drift_csv = out / "integral_drift.csv"
    with open(drift_csv, "w") as fh:
        fh.write("t, drift\n")
        for t, d in zip(probe, drift):
            fh.write(f"{t:.17g}, {d:.17g}\n")

    fig, ax = plt.subplots(figsize=(6, 4))
    floor = 1e-17
    ax.semilogy(probe, np.maximum(drift, floor), marker=".", lw=1)
    ax.set_xlabel("t")
    ax.set_ylabel("max |c_k(t) - c_k(t0)|")
    ax.set_title("first-integral drift")
    drift_png = out / "integral_drift.png"
    fig.savefig(drift_png, **_FIG_KW)
    plt.close(fig)
    return [traj_png, drift_csv, drift_png]


def render_residual_figure(verify_json_path, out_dir) -> list[Path]:
    """Bar chart of per-identity residuals from a verification report,
    plus a delimited copy of the plotted numbers."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(verify_json_path) as fh:
        report = json.load(fh)
    names = sorted(report)
    max_abs = np.array([max(report[n]["max_abs"], 1e-17) for n in names])
    thresholds = np.array([report[n].get("threshold", np.nan) for n in names])
    passed = [bool(report[n]["pass"]) for n in names]

    res_csv = out / "residuals.csv"
    with open(res_csv, "w") as fh:
        fh.write("identity, max_abs, rms, threshold, pass\n")
        for n in names:
            e = report[n]
            fh.write(f"{n}, {e['max_abs']:.17g}, {e['rms']:.17g}, "
                     f"{e.get('threshold', float('nan')):.17g}, {int(e['pass'])}\n")

    fig, ax = plt.subplots(figsize=(7, 0.35 * len(names) + 1.5))
    ypos = np.arange(len(names))
    colors = ["#2a9d3a" if ok else "#c43333" for ok in passed]
    ax.barh(ypos, max_abs, color=colors, height=0.6)
    finite = np.isfinite(thresholds)
    ax.scatter(thresholds[finite], ypos[finite], marker="|", s=120, color="k",
               label="threshold", zorder=3)
    ax.set_xscale("log")
    ax.set_yticks(ypos)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("max |residual|")
    ax.set_title("identity residuals")
    ax.legend(loc="lower right", fontsize=8)
    res_png = out / "residuals.png"
    fig.savefig(res_png, **_FIG_KW)
    plt.close(fig)
    return [res_csv, res_png]
