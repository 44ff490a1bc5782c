"""Static SVG figures for regions, partitions and codebook curves.

Output is reproducible: no timestamp metadata and a fixed SVG id salt.
"""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

__all__ = ["emit_plot", "emit_curve", "emit_partition_map", "emit_choice_map"]

_RC = {"svg.hashsalt": "mrstab", "svg.fonttype": "none", "font.size": 9}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_plot(path, regions: Sequence[tuple], title: str = "",
              xlabel: str = "R1 (bits/slot)", ylabel: str = "R2 (bits/slot)") -> None:
    """Overlay labelled convex regions; the first one is filled."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        for i, (label, poly) in enumerate(regions):
            v = np.asarray(poly.vertices)
            closed = np.vstack([v, v[:1]])
            if i == 0 and len(v) >= 3:
                ax.fill(v[:, 0], v[:, 1], alpha=0.25, label=label)
                ax.plot(closed[:, 0], closed[:, 1], lw=1.5)
            else:
                ax.plot(closed[:, 0], closed[:, 1], lw=1.0, label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_xlim(left=0)
        ax.set_ylim(bottom=0)
        ax.set_aspect("equal", adjustable="box")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", fontsize=7)
        _save(fig, path)


def emit_curve(path, x, series: dict, title: str = "", xlabel: str = "N",
               ylabel: str = "") -> None:
    """Line plot of ``series`` {label: (y, yerr)} against ``x``."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 4))
        for label, (y, err) in series.items():
            ax.errorbar(x, y, yerr=err, marker="o", capsize=3, label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, lw=0.3)
        ax.legend(fontsize=7)
        _save(fig, path)


def _label(rate_set) -> str:
    return "{" + ", ".join(f"({r[0]:g},{r[1]:g})" for r in rate_set) + "}"


def emit_partition_map(path, cells, title: str = "", clip: float | None = None) -> None:
    """Axis-aligned MAC peak cells drawn in the (chi1, chi2) plane."""
    finite = [b for c in cells for rect in c.rectangles for lim in rect for b in lim
              if math.isfinite(b)]
    top = clip if clip is not None else 1.5 * max(finite + [1.0])
    cmap = plt.get_cmap("tab20")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        for i, c in enumerate(cells):
            first = True
            for (x0, x1), (y0, y1) in c.rectangles:
                x1, y1 = min(x1, top), min(y1, top)
                if x1 <= x0 or y1 <= y0:
                    continue
                ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, color=cmap(i % 20),
                                       label=_label(c.rate_set) if first else None))
                first = False
        ax.set_xlim(0, top)
        ax.set_ylim(0, top)
        ax.set_xlabel("chi1")
        ax.set_ylabel("chi2")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=6, loc="upper left", bbox_to_anchor=(1.0, 1.0))
        fig.tight_layout()
        _save(fig, path)


def emit_choice_map(path, inv_chi: np.ndarray, labels: np.ndarray, names: Sequence[str],
                    title: str = "") -> None:
    """Scatter of sampled states in chi^-1 coordinates coloured by decision."""
    cmap = plt.get_cmap("tab10")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        for k, name in enumerate(names):
            sel = labels == k
            if np.any(sel):
                ax.scatter(inv_chi[sel, 0], inv_chi[sel, 1], s=2, color=cmap(k % 10),
                           label=name, rasterized=False)
        ax.set_xlabel("1/chi1")
        ax.set_ylabel("1/chi2")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=6, markerscale=4)
        _save(fig, path)
