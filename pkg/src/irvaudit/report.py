"""Render figures from an exported simulation results CSV.

Kept apart from the harness so the library never imports matplotlib
unless a report is actually requested.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .simulate import read_results


def render_report(csv_path, outdir) -> list[str]:
    """Write summary figures next to the delimited output; returns file paths."""
    sims, aggs = read_results(csv_path)
    if not sims:
        raise ValueError(f"no simulation rows in {csv_path}")
    os.makedirs(outdir, exist_ok=True)
    written = []

    configs: dict[str, None] = {}
    for row in sims:
        configs.setdefault(row["config"], None)
    labels = list(configs)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    data = [[r["draws"] for r in sims if r["config"] == label] for label in labels]
    ax.boxplot(data, tick_labels=[_short(c) for c in labels], whis=(5, 95))
    ax.set_ylabel("sample size (ballots)")
    ax.set_title("Sample size by configuration")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    path = os.path.join(outdir, "sample_sizes.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label in labels:
        draws = sorted(r["draws"] for r in sims if r["config"] == label)
        n = len(draws)
        ax.step(draws, [(i + 1) / n for i in range(n)], where="post", label=_short(label))
    ax.set_xlabel("sample size (ballots)")
    ax.set_ylabel("fraction of audits finished")
    ax.set_title("Empirical distribution of audit sample sizes")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = os.path.join(outdir, "sample_size_cdf.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    data = [[r["peak_frontier"] for r in sims if r["config"] == label] for label in labels]
    ax.boxplot(data, tick_labels=[_short(c) for c in labels], whis=(5, 95))
    ax.set_ylabel("peak frontier size (nodes)")
    ax.set_title("Frontier growth by configuration")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    path = os.path.join(outdir, "frontier_sizes.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    if aggs:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        xs = range(len(aggs))
        ax.bar(xs, [a["certified_rate"] for a in aggs], 0.6, label="certified")
        ax.bar(
            xs,
            [a["full_count_rate"] for a in aggs],
            0.6,
            bottom=[a["certified_rate"] for a in aggs],
            label="full hand count",
        )
        ax.set_xticks(list(xs))
        ax.set_xticklabels([_short(a["config"]) for a in aggs], fontsize=8)
        ax.set_ylabel("rate")
        ax.set_title("Audit outcomes")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(outdir, "outcome_rates.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    return written


def _short(label: str, limit: int = 28) -> str:
    return label if len(label) <= limit else label[: limit - 2] + ".."
