"""Report figures. Rendered off-screen to PNG files next to report.txt."""

from __future__ import annotations

from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

COLORS = ["#2b8cbe", "#e34a33", "#4daf4a", "#984ea3"]

STYLE = {
    "axes.prop_cycle": matplotlib.cycler(color=COLORS),
    "axes.labelsize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [5.0, 3.2],
    "figure.dpi": 120,
    "savefig.bbox": "tight",
    "lines.linewidth": 1.0,
}


def _save(fig, path: Path) -> Path:
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_chunk_sizes(sizes, chunk_n: int, width_bytes: int, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        sizes = np.asarray(sizes)
        if sizes.size:
            ax.plot(np.arange(sizes.size), sizes, marker=".", markersize=2, linestyle="none")
        ax.axhline(chunk_n * width_bytes, color=COLORS[1], linestyle="--", label="raw chunk")
        ax.set_xlabel("chunk index")
        ax.set_ylabel("compressed bytes")
        ax.set_ylim(bottom=0)
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def plot_widths(widths, case2, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        widths = np.asarray(widths)
        case2 = np.asarray(case2, dtype=bool)
        for mask, label in ((~case2, "decimal scaled"), (case2, "raw bits")):
            counts = Counter(widths[mask].tolist())
            if counts:
                xs = sorted(counts)
                ax.bar(xs, [counts[x] for x in xs], label=label, alpha=0.8)
        ax.set_xlabel("bit planes per chunk")
        ax.set_ylabel("chunks")
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def plot_throughput(compress_gbps: float, decompress_gbps: float, ratio: float, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        bars = ax.bar(["compress", "decompress"], [compress_gbps, decompress_gbps], color=COLORS[:2])
        for bar in bars:
            ax.annotate(
                f"{bar.get_height():.3f}",
                (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                ha="center",
                va="bottom",
            )
        ax.set_ylabel("GB/s")
        ax.set_title(f"ratio {ratio:.4f}")
        return _save(fig, Path(path))
