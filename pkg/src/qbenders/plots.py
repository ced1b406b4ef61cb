"""Figure rendering for benchmark reports.

Every report path that writes delimited output can also render the matching
matplotlib figure next to it: total-time comparison across instance sizes,
the master/subproblem/data-processing breakdown, and the best-case
extrapolation bars.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

BUCKET_COLORS = {"master": "#d95f02", "subproblem": "#1b9e77",
                 "data_processing": "#7570b3"}


def save_comparison_figure(reports, path):
    """Total computation time per configuration over instance size."""
    configs = sorted({r.config for r in reports})
    fig, ax = plt.subplots(figsize=(6, 4))
    for cfg in configs:
        pts = sorted((r.meta.get("time_steps"), r.timings.get("total"))
                     for r in reports
                     if r.config == cfg and r.meta.get("time_steps") is not None)
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=cfg)
    ax.set_xlabel("typical time steps")
    ax.set_ylabel("computation time [s]")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_breakdown_figure(reports, path, config=None):
    """Stacked bars of the three timing buckets per instance."""
    rows = [r for r in reports if config is None or r.config == config]
    rows.sort(key=lambda r: (r.meta.get("time_steps") or 0, r.instance))
    labels = [str(r.meta.get("time_steps") or r.instance) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    bottom = [0.0] * len(rows)
    for bucket in ("master", "subproblem", "data_processing"):
        vals = [r.timings.get(bucket, 0.0) for r in rows]
        ax.bar(labels, vals, bottom=bottom, label=bucket,
               color=BUCKET_COLORS[bucket])
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_xlabel("typical time steps")
    ax.set_ylabel("computation time [s]")
    title = config or (rows[0].config if rows else "")
    ax.set_title(f"time breakdown: {title}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_extrapolation_figure(extrapolations, path):
    """Raw vs best-case totals, side by side per instance."""
    labels = [str(e.get("instance", i)) for i, e in enumerate(extrapolations)]
    raw = [e["raw_total_s"] for e in extrapolations]
    best = [e["best_case_total_s"] for e in extrapolations]
    x = range(len(labels))
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.38
    ax.bar([i - width / 2 for i in x], raw, width, label="measured")
    ax.bar([i + width / 2 for i in x], best, width, label="best case")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylabel("computation time [s]")
    if max(raw, default=1) > 0 and min(best, default=1) > 0:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
