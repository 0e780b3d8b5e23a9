"""Stage functions shared by the CLI and by in-memory callers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from citeaudit.ranking import (
    MoversReport,
    RankComparison,
    Ranking,
    compare,
    rank_articles,
    top_movers,
)
from citeaudit.scoring import (
    ArticleProfile,
    ArticleScore,
    ScoreModel,
    build_profile,
    score_article,
)
from citeaudit.wikitext import Citation, ExtractConfig, WikiPage, extract_citations


def extract_pages(
    pages: Iterable[WikiPage],
    config: ExtractConfig | None = None,
    titles: set[str] | None = None,
) -> tuple[int, list[Citation]]:
    """Citations of every page (optionally only pages in ``titles``)."""
    config = config or ExtractConfig()
    processed = 0
    out: list[Citation] = []
    for page in pages:
        if titles is not None and page.title not in titles:
            continue
        processed += 1
        out.extend(extract_citations(page, config))
    return processed, out


def profiles_by_article(citations: Iterable[Citation]) -> list[ArticleProfile]:
    groups: dict[str, list[Citation]] = {}
    for cit in citations:
        groups.setdefault(cit.article_title, []).append(cit)
    return [build_profile(title, groups[title]) for title in sorted(groups)]


@dataclass
class ModelResults:
    model: ScoreModel
    scores: list[ArticleScore]
    ranking: Ranking
    comparison: RankComparison | None = None
    movers: MoversReport | None = None


@dataclass
class ScoreRun:
    profiles: list[ArticleProfile]
    results: list[ModelResults] = field(default_factory=list)

    @property
    def baseline(self) -> ModelResults:
        return self.results[0]


def score_and_rank(
    profiles: list[ArticleProfile], models: list[ScoreModel], movers_n: int = 10
) -> ScoreRun:
    """Score every profile under every model; compare each model with the first."""
    if not models:
        raise ValueError("at least one model is required")
    ids = [m.model_id for m in models]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate model ids: {ids}")
    run = ScoreRun(profiles)
    for model in models:
        scores = [score_article(p, model) for p in profiles]
        run.results.append(ModelResults(model, scores, rank_articles(scores, model.model_id)))
    base = run.results[0].ranking
    for res in run.results:
        res.comparison = compare(base, res.ranking)
        if res.comparison.rows:
            res.movers = top_movers(res.comparison, movers_n)
    return run
