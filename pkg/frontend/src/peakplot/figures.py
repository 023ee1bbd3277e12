"""Matplotlib figure builders for solver result directories."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reading import load_history, load_snapshots, load_summary, load_trajectory


def plot_timeseries(run_dir, out_path, dpi=150):
    """States and controls against physical time, with the peak-time marker."""
    summary = load_summary(run_dir)
    traj = load_trajectory(run_dir)
    tau = summary["tau_star"]

    fig, (ax_y, ax_u) = plt.subplots(2, 1, figsize=(7.5, 6.5), sharex=True)
    for j in range(traj["y"].shape[1]):
        ax_y.plot(traj["t"], traj["y"][:, j], label=f"$y_{{{j + 1}}}$", lw=1.2)
    ax_y.axvline(tau, color="k", ls="--", lw=0.9, label=rf"$\tau^* = {tau:.3f}$")
    ax_y.set_ylabel("state")
    ax_y.legend(loc="best", fontsize=8)
    ax_y.grid(alpha=0.3)

    for j in range(traj["u"].shape[1]):
        ax_u.plot(traj["t"], traj["u"][:, j], label=f"$u_{{{j + 1}}}$", lw=1.2)
    ax_u.axvline(tau, color="k", ls="--", lw=0.9)
    ax_u.set_xlabel("t")
    ax_u.set_ylabel("control")
    if traj["u"].shape[1] <= 4:
        ax_u.legend(loc="best", fontsize=8)
    ax_u.grid(alpha=0.3)

    fig.suptitle(f"{summary['model']}: J* = {summary['J_star']:.6g}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)
    return out_path


def plot_snapshots(run_dir, out_path, dpi=150):
    """Grid of per-time space profiles of the state and the control."""
    summary = load_summary(run_dir)
    snaps = load_snapshots(run_dir)
    cols = min(4, len(snaps))
    rows = int(np.ceil(len(snaps) / cols))

    fig, axes = plt.subplots(
        2 * rows, cols, figsize=(3.0 * cols, 3.6 * rows), squeeze=False
    )
    for k, snap in enumerate(snaps):
        r, c = divmod(k, cols)
        ax_y = axes[2 * r][c]
        ax_u = axes[2 * r + 1][c]
        ax_y.plot(snap["x"], snap["y"], lw=1.2)
        ax_y.set_title(f"t = {snap['t']:.4f}", fontsize=9)
        ax_y.set_ylabel("y")
        ax_y.grid(alpha=0.3)
        ax_u.plot(snap["x"], snap["u"], color="tab:red", lw=1.2)
        ax_u.set_ylabel("u")
        ax_u.set_xlabel("x")
        ax_u.grid(alpha=0.3)
    for k in range(len(snaps), rows * cols):
        r, c = divmod(k, cols)
        axes[2 * r][c].axis("off")
        axes[2 * r + 1][c].axis("off")

    fig.suptitle(f"{summary['model']}: tau* = {summary['tau_star']:.4f}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)
    return out_path


def plot_history(run_dir, out_path, dpi=150):
    """Gradient-norm and objective trace over the optimization phases."""
    hist = load_history(run_dir)
    fig, (ax_g, ax_j) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    idx = np.arange(len(hist["grad_norm_sq"]))
    newton_mask = np.array([ph == "newton" for ph in hist["phase"]])
    ax_g.semilogy(idx, hist["grad_norm_sq"], lw=1.0, color="tab:blue")
    if newton_mask.any():
        switch = int(np.argmax(newton_mask))
        ax_g.axvline(switch - 0.5, color="k", ls=":", lw=0.9)
        ax_g.annotate("Newton phase", (switch, hist["grad_norm_sq"][switch]),
                      fontsize=8, textcoords="offset points", xytext=(4, 8))
    ax_g.set_ylabel("squared gradient norm")
    ax_g.grid(alpha=0.3)
    ax_j.plot(idx, hist["objective"], lw=1.0, color="tab:green")
    ax_j.set_xlabel("iteration")
    ax_j.set_ylabel("objective")
    ax_j.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)
    return out_path
