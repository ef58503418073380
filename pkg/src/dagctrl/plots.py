"""Figure rendering for simulation traces and verification reports.

Figures are always written to files (Agg backend, no display); they sit
next to the CSV/JSON output of the CLI so a report directory is
self-contained.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .runtime import SimTrace

__all__ = ["save_trace_figure", "save_suite_figure", "save_compare_figure"]


def save_trace_figure(trace: SimTrace, path) -> None:
    """Three-panel trace plot: plant states, inputs, running cost."""
    fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
    for i in range(trace.x.shape[1]):
        axes[0].plot(trace.t, trace.x[:, i], lw=0.9, label=f"x{i}")
    axes[0].set_ylabel("plant state")
    axes[0].legend(loc="upper right", fontsize=8, ncol=4)
    for i in range(trace.u.shape[1]):
        axes[1].plot(trace.t, trace.u[:, i], lw=0.9, label=f"u{i}")
    axes[1].set_ylabel("input")
    axes[1].legend(loc="upper right", fontsize=8, ncol=4)
    axes[2].plot(trace.t, trace.running_cost, lw=1.2, color="tab:red")
    axes[2].set_ylabel("running cost")
    axes[2].set_xlabel("t")
    fig.suptitle(f"closed-loop trace ({trace.mode})")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_compare_figure(trace_a: SimTrace, trace_b: SimTrace, path) -> None:
    """Overlay of inputs from two runs plus their pointwise deviation."""
    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for i in range(trace_a.u.shape[1]):
        axes[0].plot(trace_a.t, trace_a.u[:, i], lw=1.0, label=f"{trace_a.mode} u{i}")
        axes[0].plot(trace_b.t, trace_b.u[:, i], lw=1.0, ls="--",
                     label=f"{trace_b.mode} u{i}")
    axes[0].set_ylabel("input")
    axes[0].legend(loc="upper right", fontsize=7, ncol=2)
    dev = np.abs(trace_a.u - trace_b.u).max(axis=1)
    axes[1].semilogy(trace_a.t, np.maximum(dev, 1e-18), lw=1.0)
    axes[1].set_ylabel("max |u dev|")
    axes[1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_suite_figure(reports, path) -> None:
    """Log-scale bar chart of each check's metric against its tolerance."""
    names = [r.name for r in reports]
    floor = 1e-18
    metrics = [max(abs(r.metric), floor) for r in reports]
    tols = [max(r.tol, floor) for r in reports]
    colors = ["tab:green" if r.passed else "tab:red" for r in reports]
    fig, ax = plt.subplots(figsize=(9, 0.35 * len(reports) + 1.5))
    ypos = np.arange(len(reports))
    ax.barh(ypos, metrics, color=colors, alpha=0.8)
    for y, tol in zip(ypos, tols):
        ax.plot([tol, tol], [y - 0.4, y + 0.4], color="k", lw=1.0)
    ax.set_yticks(ypos)
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xscale("log")
    ax.set_xlabel("worst metric (bar) vs tolerance (tick)")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
