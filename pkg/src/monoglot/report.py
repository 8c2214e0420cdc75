"""Figure rendering for the CLI report paths.

Figures are written next to the delimited output files; matplotlib runs
headless (Agg backend).
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def training_curve(log_rows, out_path):
    """Plot validation perplexity and learning rate per checkpoint."""
    if not log_rows:
        return None
    ckpts = [r[0] for r in log_rows]
    lrs = [r[2] for r in log_rows]
    ppls = [r[4] for r in log_rows]
    fig, ax1 = plt.subplots(figsize=(7, 4))
    ax1.plot(ckpts, ppls, marker="o", color="tab:blue", label="valid perplexity")
    ax1.set_xlabel("checkpoint")
    ax1.set_ylabel("validation perplexity", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(ckpts, lrs, drawstyle="steps-post", color="tab:red", label="lr")
    ax2.set_ylabel("learning rate", color="tab:red")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def score_histogram(per_sentence, metric_name, out_path):
    """Histogram of per-sentence metric values."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(per_sentence, bins=20, color="tab:green", edgecolor="black")
    ax.set_xlabel(f"sentence {metric_name}")
    ax.set_ylabel("sentences")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
