"""Figure rendering for the experiment drivers.

Each writer takes the in-memory result produced by the harness and saves a
PNG next to the text table.  Rendering is presentation only; nothing here
feeds back into the numbers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, ax, path, title):
    ax.set_title(title, fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def convergence_figure(table, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    for label in table.column_labels():
        errs = np.asarray(table.errors[label], dtype=float)
        shown = np.where(np.isfinite(errs), errs, np.nan)
        marker = "+" if label == "base" else "o"
        slope = table.slopes.get(label)
        text = label if slope is None or np.isnan(slope) else f"{label} (slope {slope:.2f})"
        ax.loglog(table.h, shown, marker=marker, ms=4, lw=1, label=text)
    ax.set_xlabel("h")
    ax.set_ylabel("relative error at the final time")
    ax.legend(fontsize=7)
    _finish(fig, ax, path, f"convergence: {table.cfg.problem} {table.cfg.predictor} {table.cfg.mode}")


def drift_figure(series, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    floor = 1e-18
    for label, values in series.columns.items():
        ax.semilogy(series.times, np.maximum(values, floor), lw=0.8, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.legend(fontsize=7, ncol=2)
    _finish(fig, ax, path, f"invariant drift: {series.cfg.problem} {series.cfg.predictor} {series.cfg.mode}")


def orbit_figure(series, path, exact=None) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    if exact is not None:
        ax.plot(exact[:, 0], exact[:, 1], "k-", lw=1, label="exact")
    ax.plot(series.positions[:, 0], series.positions[:, 1], "o", ms=3, label="numerical")
    ax.set_xlabel("y1")
    ax.set_ylabel("y2")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(fontsize=7)
    _finish(fig, ax, path, f"final-period orbit: {series.cfg.problem}")
