"""Benchmark report rendering: delimited output plus figures.

Writes the per-model CSV and aggregate JSON, then renders matplotlib
figures for precision/recall per grid cell and the orientation-rule
distribution into the same directory.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .discovery import RULE_NAMES
from .evaluation import SweepReport


def _cell_label(cell) -> str:
    return f"E{cell[0]}/D{cell[1]}/L{cell[2]}"


def render_scores_figure(report: SweepReport, path: str) -> None:
    aggregate = report.aggregate()
    algos = sorted({row["algo"] for row in aggregate})
    cells = report.cells()
    fig, axes = plt.subplots(2, 1, figsize=(max(8, len(cells) * 0.5), 7),
                             sharex=True)
    xs = range(len(cells))
    width = 0.8 / max(len(algos), 1)
    for metric, ax in zip(("precision", "recall"), axes):
        for i, algo in enumerate(algos):
            by_cell = {
                (r["n_entities"], r["n_dependencies"], r["n_latents"]): r
                for r in aggregate if r["algo"] == algo}
            means = [by_cell[c][f"{metric}_mean"] if c in by_cell else 0.0
                     for c in cells]
            stds = [by_cell[c][f"{metric}_std"] if c in by_cell else 0.0
                    for c in cells]
            offs = [x + (i - (len(algos) - 1) / 2) * width for x in xs]
            ax.bar(offs, means, width=width, yerr=stds, capsize=2, label=algo)
        ax.set_ylabel(metric)
        ax.set_ylim(0, 1.05)
        ax.legend()
    axes[1].set_xticks(list(xs))
    axes[1].set_xticklabels([_cell_label(c) for c in cells],
                            rotation=60, ha="right", fontsize=7)
    axes[1].set_xlabel("entities / dependencies / latents")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_rules_figure(report: SweepReport, path: str) -> None:
    algos = sorted({r.algo for r in report.rows})
    fig, ax = plt.subplots(figsize=(8, 4))
    width = 0.8 / max(len(algos), 1)
    xs = range(len(RULE_NAMES))
    for i, algo in enumerate(algos):
        dist = report.rule_distribution(algo)
        offs = [x + (i - (len(algos) - 1) / 2) * width for x in xs]
        ax.bar(offs, [dist.get(name, 0) for name in RULE_NAMES],
               width=width, label=algo)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(RULE_NAMES)
    ax.set_ylabel("firings")
    ax.set_title("orientation rule usage")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(report: SweepReport, outdir: str) -> dict[str, str]:
    """Write CSV, JSON, and figures; returns the paths produced."""
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "csv": os.path.join(outdir, "sweep.csv"),
        "json": os.path.join(outdir, "sweep.json"),
        "scores_png": os.path.join(outdir, "scores.png"),
        "rules_png": os.path.join(outdir, "rules.png"),
    }
    report.to_csv(paths["csv"])
    report.to_json(paths["json"])
    render_scores_figure(report, paths["scores_png"])
    render_rules_figure(report, paths["rules_png"])
    return paths
