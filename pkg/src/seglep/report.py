"""Figure rendering for evaluation sweeps and calibration traces.

Everything draws through the Agg backend and lands in a file; nothing
here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np


def sweep_figure(thresholds: np.ndarray, curves: dict[str, np.ndarray],
                 path: Path) -> None:
    """Mean score per threshold, one line per measure."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, values in curves.items():
        ax.plot(thresholds, values, marker=".", markersize=3, label=name)
    ax.set_xlabel("merge level threshold")
    ax.set_ylabel("mean score")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def trace_figure(trace: list[float], path: Path) -> None:
    """Incumbent objective value over calibration steps."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(trace)), trace, marker="o", markersize=4)
    ax.set_xlabel("parameter step")
    ax.set_ylabel("objective")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
