"""Matplotlib figures rendered straight to files (headless Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def plot_value_curves(dates, series: dict[str, list[float]], path: str | Path) -> None:
    """Normalized portfolio values, one line per run."""
    fig, ax = plt.subplots(figsize=(10, 5))
    for label, values in series.items():
        ax.plot(dates, values, label=label, linewidth=1.2)
    ax.axhline(1.0, color="gray", linewidth=0.6, linestyle="--")
    ax.set_xlabel("date")
    ax.set_ylabel("portfolio value / initial")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_weights(dates, weights, names: list[str], path: str | Path) -> None:
    """Stacked allocation over time for a single run."""
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.stackplot(dates, weights.T, labels=names, alpha=0.85)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("date")
    ax.set_ylabel("weight")
    ax.legend(loc="upper left", ncol=min(len(names), 5), fontsize=8)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_loss_curve(curve: list[dict], path: str | Path) -> None:
    """Forecaster train/validation loss per epoch."""
    fig, ax = plt.subplots(figsize=(8, 4))
    epochs = [row["epoch"] for row in curve]
    ax.plot(epochs, [row["train_loss"] for row in curve], label="train")
    if any(row["val_loss"] == row["val_loss"] for row in curve):  # any non-NaN
        ax.plot(epochs, [row["val_loss"] for row in curve], label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean RMSE")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_forecast_scatter(preds, targets, path: str | Path) -> None:
    """Predicted vs realized next-day log-returns."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(targets, preds, s=6, alpha=0.4)
    lo = min(float(min(targets.min(), preds.min())), 0.0)
    hi = max(float(max(targets.max(), preds.max())), 0.0)
    ax.plot([lo, hi], [lo, hi], color="gray", linewidth=0.8)
    ax.set_xlabel("realized")
    ax.set_ylabel("predicted")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
