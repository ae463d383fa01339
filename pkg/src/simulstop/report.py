"""Figure rendering for the reporting commands.

Sweep and validation outputs get a companion PNG next to the delimited
file: sweeps as a line plot of the swept quantity, validation reports as
a z-score bar chart with the +-3 acceptance band.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

plt.rcParams["figure.dpi"] = 150
plt.rcParams["savefig.bbox"] = "tight"
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3

__all__ = ["render_sweep_figure", "render_validation_figure"]


def render_sweep_figure(rows, param: str, quantity: str, out_path: str) -> None:
    """Line plot of sweep results; failed rows are skipped."""
    xs = [r[0] for r in rows if r[1] is not None]
    ys = [r[1] for r in rows if r[1] is not None]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    if xs:
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2)
    ax.set_xlabel(param)
    ax.set_ylabel(quantity)
    ax.set_title(f"{quantity} vs {param}")
    fig.savefig(out_path)
    plt.close(fig)


def render_validation_figure(report, out_path: str) -> None:
    """Horizontal z-score bars for every check, with the |z| = 3 band."""
    rows = report.rows
    names = [r.name for r in rows]
    zs = [0.0 if math.isinf(r.z_score) else r.z_score for r in rows]
    colors = ["#2a7e43" if r.passed else "#b03a2e" for r in rows]
    height = max(2.5, 0.32 * len(rows) + 1.2)
    fig, ax = plt.subplots(figsize=(7.0, height))
    ax.barh(range(len(rows)), zs, color=colors)
    ax.axvline(-3.0, color="#888", linestyle="--", linewidth=0.9)
    ax.axvline(3.0, color="#888", linestyle="--", linewidth=0.9)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("z score (identity rows: discrepancy / tolerance)")
    ax.set_title(
        f"{report.model} validation, n={report.samples}, seed={report.seed}: "
        f"{'pass' if report.passed else 'FAIL'}"
    )
    fig.savefig(out_path)
    plt.close(fig)
