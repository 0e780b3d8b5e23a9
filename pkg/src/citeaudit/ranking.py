"""Ranking articles within a model and comparing ranks across models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from citeaudit.scoring import ArticleScore

# Scores equal to this many decimals are one tie group. Float sums of the
# same rational score can differ in the last ulp, and score CSVs carry this
# precision, so ranking from a CSV matches ranking in memory.
TIE_DECIMALS = 6


class RankingError(ValueError):
    pass


@dataclass(frozen=True)
class RankEntry:
    title: str
    score: float
    rank: int
    tie_group: int


@dataclass(frozen=True)
class Ranking:
    model_id: str
    entries: tuple[RankEntry, ...]

    def rank_of(self) -> dict[str, int]:
        return {e.title: e.rank for e in self.entries}

    def tie_groups(self) -> list[list[str]]:
        groups: dict[int, list[str]] = {}
        for e in self.entries:
            groups.setdefault(e.tie_group, []).append(e.title)
        return [groups[k] for k in sorted(groups)]


@dataclass(frozen=True)
class ComparisonRow:
    title: str
    rank_base: int
    rank_other: int

    @property
    def delta(self) -> int:
        """Positive when the article ranks better under the other model."""
        return self.rank_base - self.rank_other


@dataclass(frozen=True)
class RankComparison:
    base_model_id: str
    other_model_id: str
    rows: tuple[ComparisonRow, ...]


@dataclass(frozen=True)
class MoversReport:
    top_gainers: tuple[ComparisonRow, ...]
    top_losers: tuple[ComparisonRow, ...]


def tie_key(score: float) -> float:
    return round(score, TIE_DECIMALS)


def rank_articles(scores: Iterable[ArticleScore], model_id: str | None = None) -> Ranking:
    """Ordinal ranks, best score first; ties ordered by title."""
    scores = list(scores)
    model_ids = {s.model_id for s in scores}
    if model_id is not None:
        model_ids.add(model_id)
    if len(model_ids) > 1:
        raise RankingError(f"scores from several models: {sorted(model_ids)}")
    seen: set[str] = set()
    dupes = sorted({s.title for s in scores if s.title in seen or seen.add(s.title)})
    if dupes:
        raise RankingError(f"duplicate titles: {dupes}")

    ordered = sorted(scores, key=lambda s: (-tie_key(s.score), s.title))
    entries = []
    group = 0
    previous = None
    for rank, s in enumerate(ordered, start=1):
        key = tie_key(s.score)
        if key != previous:
            group += 1
            previous = key
        entries.append(RankEntry(s.title, s.score, rank, group))
    return Ranking(model_ids.pop() if model_ids else "", tuple(entries))


def compare(base: Ranking, other: Ranking) -> RankComparison:
    base_ranks = base.rank_of()
    other_ranks = other.rank_of()
    if base_ranks.keys() != other_ranks.keys():
        diff = sorted(base_ranks.keys() ^ other_ranks.keys())
        raise RankingError(f"rankings cover different titles; symmetric difference: {diff}")
    rows = tuple(
        ComparisonRow(e.title, e.rank, other_ranks[e.title]) for e in base.entries
    )
    return RankComparison(base.model_id, other.model_id, rows)


def top_movers(cmp: RankComparison, n: int) -> MoversReport:
    if n < 1:
        raise ValueError("n must be at least 1")
    gainers = sorted(cmp.rows, key=lambda r: (-r.delta, r.title))[:n]
    losers = sorted(cmp.rows, key=lambda r: (r.delta, r.title))[:n]
    return MoversReport(tuple(gainers), tuple(losers))


def scatter_data(cmp: RankComparison) -> list[tuple[int, int, str]]:
    return sorted((r.rank_base, r.rank_other, r.title) for r in cmp.rows)


def render_scatter_svg(points: Sequence[tuple[int, int, str]], title: str = "") -> str:
    """Standalone SVG scatter of (rank_base, rank_other) on a 1000x1000 canvas.

    Rank 1 sits at the bottom-left corner, so identical rankings fall on the
    rising diagonal.
    """
    n = max((max(p[0], p[1]) for p in points), default=1)
    lo, hi = 50.0, 950.0
    span = hi - lo

    def pos(rank: int) -> float:
        return lo if n <= 1 else lo + (rank - 1) * span / (n - 1)

    radius = max(1.0, min(6.0, 2000.0 / max(n, 1) ** 0.5 / 10))
    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1000 1000" '
        'width="1000" height="1000">',
        '<rect x="0" y="0" width="1000" height="1000" fill="white"/>',
        f'<line x1="{lo}" y1="{hi}" x2="{hi}" y2="{lo}" stroke="#cccccc" stroke-width="1"/>',
        f'<rect x="{lo}" y="{lo}" width="{span}" height="{span}" fill="none" '
        'stroke="black" stroke-width="1"/>',
    ]
    if title:
        out.append(
            f'<text x="500" y="30" text-anchor="middle" font-size="20">{_escape(title)}</text>'
        )
    for rank_base, rank_other, label in points:
        x = pos(rank_base)
        y = hi - (pos(rank_other) - lo)
        out.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius:.2f}" fill="#1f77b4">'
            f"<title>{_escape(label)}</title></circle>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )
