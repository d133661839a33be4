"""Evaluation report output: delimited metrics plus summary figures.

The evaluate command writes one CSV row per image pair plus an aggregate
row, and renders matplotlib figures (per-metric distributions and the
aggregate summary) next to the CSV for quick visual triage.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import MetricReport


def _columns(reports: list[MetricReport]) -> list[str]:
    cols = list(MetricReport.FIELDS)
    extra = sorted(set().union(*(r.extras.keys() for r in reports)))
    return cols + extra


def write_metrics_csv(reports: list[MetricReport], aggregate: MetricReport, path) -> Path:
    """Write per-pair rows and a final aggregate row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = _columns(reports)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["name"] + cols)
        for report in reports + [aggregate]:
            values = report.values()
            writer.writerow([report.name] + [f"{values.get(c, math.nan):.6g}" for c in cols])
    return path


def render_metric_figures(reports: list[MetricReport], aggregate: MetricReport, stem) -> list[Path]:
    """Render distribution and summary figures alongside the CSV.

    `stem` is the CSV path; figures land next to it as <stem>_dist.png and
    <stem>_summary.png.  Returns the paths written.
    """
    stem = Path(stem)
    base = stem.with_suffix("")
    cols = _columns(reports)
    written: list[Path] = []

    ncols = 3
    nrows = math.ceil(len(cols) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3 * nrows), squeeze=False)
    for ax, col in zip(axes.flat, cols):
        values = [r.values().get(col, math.nan) for r in reports]
        finite = [v for v in values if math.isfinite(v)]
        if finite:
            ax.hist(finite, bins=min(20, max(5, len(finite) // 2)), color="#4878cf")
        ax.set_title(col)
        ax.set_ylabel("pairs")
    for ax in axes.flat[len(cols):]:
        ax.axis("off")
    fig.suptitle(f"Metric distributions over {len(reports)} pairs")
    fig.tight_layout()
    dist_path = base.parent / f"{base.name}_dist.png"
    fig.savefig(dist_path, dpi=110)
    plt.close(fig)
    written.append(dist_path)

    fig, ax = plt.subplots(figsize=(1.2 * len(cols) + 2, 3.5))
    agg_values = aggregate.values()
    finite_cols = [c for c in cols if math.isfinite(agg_values.get(c, math.nan))]
    ax.bar(finite_cols, [agg_values[c] for c in finite_cols], color="#6acc65")
    ax.set_yscale("log")
    ax.set_title("Aggregate metrics (log scale)")
    fig.tight_layout()
    summary_path = base.parent / f"{base.name}_summary.png"
    fig.savefig(summary_path, dpi=110)
    plt.close(fig)
    written.append(summary_path)
    return written
