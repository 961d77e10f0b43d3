"""Matplotlib rendering of report figures, written next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def convergence_figure(reports, outfile):
    """Log-log error curves (L2 and form norm) against the resolution."""
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), constrained_layout=True)
    for report in reports:
        ns = [r.n for r in report.records]
        tag = f"{report.label}, lam={report.lam:g}"
        axes[0].loglog(ns, [r.err_l2 for r in report.records], "o-", label=tag)
        axes[1].loglog(ns, [r.err_e1 for r in report.records], "s--", label=tag)
    axes[0].set_ylabel("L2(m) error")
    axes[1].set_ylabel("form-norm error")
    for ax in axes:
        ax.set_xlabel("states n")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    fig.savefig(outfile, dpi=150)
    plt.close(fig)


def paths_figure(paths, outfile):
    """Step plot of sampled trajectories (position against time)."""
    fig, ax = plt.subplots(figsize=(7.0, 3.6), constrained_layout=True)
    for path in paths:
        grid = path.chain.grid
        times = [0.0, *path.times.tolist(), path.horizon]
        pos = [grid[path.initial_state], *grid[path.states].tolist()]
        pos.append(pos[-1])
        ax.step(times, pos, where="post", lw=0.8,
                label=f"stream {path.stream}")
    ax.set_xlabel("time")
    ax.set_ylabel("position")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.savefig(outfile, dpi=150)
    plt.close(fig)
