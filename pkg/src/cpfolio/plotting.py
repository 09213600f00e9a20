"""Figures for the score and simulation reports."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .scoring import ScoreTable  # noqa: E402


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_scores(table: ScoreTable, path: str | Path, title: str = "Borda scores") -> Path:
    ranking = table.ranking()
    names = [s for s, _ in ranking]
    complete = [float(v) for _, v in ranking]
    incomplete = [float(table.incomplete[s]) for s in names]
    xs = range(len(names))
    width = 0.4
    fig, ax = plt.subplots(figsize=(max(4, 1.1 * len(names) + 2), 3.6))
    ax.bar([x - width / 2 for x in xs], complete, width, label="complete", color="#33658a")
    ax.bar([x + width / 2 for x in xs], incomplete, width, label="incomplete", color="#f6ae2d")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("points")
    ax.set_title(title)
    ax.legend(frameon=False)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    return _finish(fig, path)


def plot_solved(solved: Mapping[str, int], total: int, path: str | Path, title: str = "Solved instances") -> Path:
    names = list(solved)
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(names) + 2), 3.2))
    bars = ax.bar(names, [solved[n] for n in names], color="#86bbd8")
    for bar, n in zip(bars, names):
        ax.annotate(str(solved[n]), (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=8)
    ax.axhline(total, color="0.5", lw=0.8, ls="--")
    ax.set_ylim(0, total * 1.12 if total else 1)
    ax.set_ylabel(f"solved (of {total})")
    ax.set_title(title)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    return _finish(fig, path)
