"""Figure rendering for training reports: loss curves and the precision
curve, written as PNG files next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_gan_losses(history, path) -> Path:
    """Converter and discriminator losses against training step.

    history rows: (step, loss_r, loss_a, loss_c).
    """
    steps = [row[0] for row in history]
    fig, (ax_d, ax_c) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_d.plot(steps, [row[1] for row in history], label="real/fake", lw=0.9)
    ax_d.plot(steps, [row[2] for row in history], label="domain", lw=0.9)
    ax_d.set_ylabel("discriminator loss")
    ax_d.legend(loc="upper right")
    ax_d.grid(alpha=0.3)
    ax_c.plot(steps, [row[3] for row in history], color="tab:green", lw=0.9)
    ax_c.set_xlabel("step")
    ax_c.set_ylabel("converter loss")
    ax_c.grid(alpha=0.3)
    fig.suptitle("Domain transfer training")
    return _finish(fig, path)


def plot_matcher_losses(history, path) -> Path:
    """Softmax, center, and joint losses against optimizer step.

    history rows: (epoch, step, l_s, l_c, joint).
    """
    steps = [row[1] for row in history]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, [row[2] for row in history], label="softmax", lw=0.9)
    ax.plot(steps, [row[3] for row in history], label="center", lw=0.9)
    ax.plot(steps, [row[4] for row in history], label="joint", lw=1.1, color="black")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(loc="upper right")
    ax.grid(alpha=0.3)
    ax.set_title("Embedder fine-tuning")
    return _finish(fig, path)


def plot_precision_curve(report, path) -> Path:
    """Mean precision@k against k for an evaluation report."""
    ks = list(report.ks)
    values = [report.precision[k] for k in ks]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, values, marker="o", ms=4)
    ax.set_xlabel("k")
    ax.set_ylabel("precision@k")
    ax.set_xticks(ks)
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.3)
    ax.set_title(f"Retrieval precision over {report.query_count} queries")
    return _finish(fig, path)
