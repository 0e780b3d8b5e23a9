"""Matplotlib renderings of the report data.

Figures are written with metadata stripped so reruns produce identical
files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "citeaudit",
}

_PNG_META = {"Software": None}


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def plot_breakdown(tallies: dict, path: str | Path) -> Path:
    """Horizontal bars, one panel per citation category group."""
    panels = [
        ("Book ISBNs", tallies["books"], ["isbn_valid", "isbn_invalid", "isbn_absent"]),
        (
            "Book identifiers (ISBN or Google Books)",
            tallies["book_identifiers"],
            ["valid", "invalid", "absent", "unresolved"],
        ),
        ("Google Books links", tallies["google_books"], ["valid", "invalid", "unknown"]),
        ("Google Books viewability", tallies["viewability"], ["full", "partial", "none"]),
        (
            "Journal citations",
            tallies["journals"],
            ["confirmed_open", "identifier_unconfirmed", "no_identifier"],
        ),
    ]
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(panels), 1, figsize=(6.5, 1.3 * len(panels) + 0.6))
        for ax, (title, counts, keys) in zip(axes, panels):
            values = [counts.get(k, 0) for k in keys]
            total = sum(values)
            ax.barh(range(len(keys)), values, color="#4c72b0")
            ax.set_yticks(range(len(keys)), [k.replace("_", " ") for k in keys])
            ax.invert_yaxis()
            ax.set_title(f"{title} (n={total})", loc="left")
            for i, v in enumerate(values):
                label = f"{v}" if not total else f"{v} ({100 * v / total:.1f}%)"
                ax.annotate(label, (v, i), xytext=(3, 0), textcoords="offset points", va="center")
            ax.set_xlim(0, max(values + [1]) * 1.3)
        fig.tight_layout()
        _save(fig, path)
    return path


def plot_rank_scatter(
    points: Sequence[tuple[int, int, str]],
    base_label: str,
    other_label: str,
    path: str | Path,
) -> Path:
    """Rank under the base model (x) against rank under the other (y)."""
    path = Path(path)
    n = max((max(p[0], p[1]) for p in points), default=1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.plot([1, n], [1, n], color="#bbbbbb", lw=0.8, zorder=1)
        ax.scatter(
            [p[0] for p in points],
            [p[1] for p in points],
            s=max(2.0, 40.0 / max(n, 1) ** 0.5),
            color="#4c72b0",
            zorder=2,
        )
        ax.set_xlim(0.5, n + 0.5)
        ax.set_ylim(0.5, n + 0.5)
        ax.set_aspect("equal")
        ax.set_xlabel(f"rank under {base_label}")
        ax.set_ylabel(f"rank under {other_label}")
        ax.set_title(f"Change in verifiability rank, {base_label} vs. {other_label}")
        fig.tight_layout()
        _save(fig, path)
    return path
