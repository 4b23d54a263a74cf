"""Figures rendered next to the CSV tables (ablation, min-size sweep, timing)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import MetricsReport  # noqa: E402

# fixed metadata keeps the PNG bytes stable between runs
_PNG_META = {"Software": None}


def _val(v):
    return float("nan") if v is None else v


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)
    return path


def metrics_bars(reports: Sequence[MetricsReport], path: str | Path, title: str = "") -> Path:
    """Side-by-side sensitivity / specificity bars, one group per setting."""
    labels = [r.label for r in reports]
    sens = [_val(r.aggregate.sensitivity) for r in reports]
    spec = [_val(r.aggregate.specificity) for r in reports]
    x = range(len(labels))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar([i - 0.2 for i in x], sens, width=0.4, label="sensitivity", color="#4c72b0")
    ax.bar([i + 0.2 for i in x], spec, width=0.4, label="specificity", color="#dd8452")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylim(0, 105)
    ax.set_ylabel("%")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", frameon=False)
    return _save(fig, Path(path))


def sweep_lines(reports: Sequence[MetricsReport], path: str | Path) -> Path:
    labels = [r.label for r in reports]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(labels, [_val(r.aggregate.sensitivity) for r in reports], "o-", label="sensitivity")
    ax.plot(labels, [_val(r.aggregate.specificity) for r in reports], "s-", label="specificity")
    ax.set_ylim(-5, 105)
    ax.set_ylabel("%")
    ax.set_xlabel("minimum lesion size")
    ax.legend(frameon=False)
    return _save(fig, Path(path))


def timing_bars(timing: dict, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3))
    names = ["coarse", "fine"]
    vals = [timing["coarse_ms_per_slice"], timing["fine_ms_per_slice"]]
    ax.bar(names, vals, color=["#55a868", "#c44e52"])
    ax.set_ylabel("ms / slice")
    ax.set_title(f"{timing['slice_count']} slices, {timing['total_ms'] / 1e3:.2f} s total")
    return _save(fig, Path(path))
