"""Matplotlib renderings of frontier and simulation reports."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLES = {
    "noncausal": ("tab:blue", "-"),
    "strictly-causal": ("tab:orange", "--"),
    "causal": ("tab:green", "-."),
    "no-cribbing": ("tab:gray", ":"),
}


def frontier_figure(frontiers: dict, corners: dict | None, path: str | Path, title: str = "") -> Path:
    """Plot R1_min against R0 for each frontier, with labelled corner markers.

    ``frontiers`` maps a mode label to a list of (R0, R1_min) points.
    Corners with an infinite R1 are drawn as vertical ticks at their R0.
    """
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    top = 0.0
    for label, pts in frontiers.items():
        if not pts:
            continue
        color, ls = STYLES.get(label, ("k", "-"))
        r0 = [p[0] for p in pts]
        r1 = [p[1] for p in pts]
        top = max(top, max(r1))
        # the region is unbounded above its left endpoint
        ax.plot([r0[0], r0[0]], [r1[0], r1[0] * 1.25 + 0.05], color=color, ls=ls, lw=1.2)
        ax.plot(r0, r1, color=color, ls=ls, lw=1.6, label=label)
    for name, (a, b) in (corners or {}).items():
        y = b if math.isfinite(b) else top * 1.2 + 0.04
        ax.plot([a], [y], "ko", ms=4)
        ax.annotate(name, (a, y), textcoords="offset points", xytext=(4, 4), fontsize=9)
    ax.set_xlabel("$R_0$ [bits]")
    ax.set_ylabel("$R_1$ [bits]")
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out)
    plt.close(fig)
    return out


def block_distortion_figure(report: dict, path: str | Path) -> Path:
    """Per-block mean distortions of a simulation report, block 1 marked."""
    dist = report["distortion"]
    d1, d2 = dist["d1_blocks"], dist["d2_blocks"]
    blocks = range(1, len(d1) + 1)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(blocks, d1, "o-", label="decoder 1")
    ax.plot(blocks, d2, "s--", label="decoder 2")
    cfg = report["config"]
    ax.axhline(cfg["D1"], color="tab:blue", lw=0.8, alpha=0.6)
    ax.axhline(cfg["D2"], color="tab:orange", lw=0.8, alpha=0.6)
    if len(d1) > 1:
        ax.axvspan(0.5, 1.5, color="0.9", zorder=0)
    ax.set_xlabel("block")
    ax.set_ylabel("mean distortion")
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out)
    plt.close(fig)
    return out
