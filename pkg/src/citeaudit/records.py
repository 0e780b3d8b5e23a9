"""JSON-lines citation records and CSV writers shared by the CLI stages.

Every writer sorts keys and fixes float formatting so that rerunning a stage
on the same input rewrites byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Iterator

from citeaudit.access import OaStatus, ResolverRecord
from citeaudit.identifiers import (
    ValidationStatus,
    identifier_from_dict,
    identifier_to_dict,
)
from citeaudit.ranking import MoversReport, RankComparison, Ranking, scatter_data
from citeaudit.scoring import COMPONENTS, ArticleScore, ComponentProportions
from citeaudit.wikitext import Anchoring, Citation, CitationKind

FLOAT_FORMAT = "{:.6f}"


def citation_to_dict(cit: Citation) -> dict:
    data = {
        "article_title": cit.article_title,
        "kind": cit.kind.value,
        "anchoring": cit.anchoring.value,
        "ref_name": cit.ref_name,
        "template": cit.template,
        "params": cit.params,
        "identifiers": [identifier_to_dict(i) for i in cit.identifiers],
        "flags": cit.flags,
        "source_span": list(cit.source_span),
    }
    if cit.isbn_status is not None:
        data["validation"] = {
            "isbn": cit.isbn_status.value,
            "doi": cit.doi_status.value,
            "google_books": cit.google_books_status.value,
        }
        data["resolver"] = cit.resolver_record.to_dict() if cit.resolver_record else None
        data["oa_status"] = cit.oa_status.value if cit.oa_status else None
    return data


def citation_from_dict(data: dict) -> Citation:
    cit = Citation(
        article_title=data["article_title"],
        kind=CitationKind(data["kind"]),
        anchoring=Anchoring(data["anchoring"]),
        params=dict(data.get("params") or {}),
        identifiers=[identifier_from_dict(i) for i in data.get("identifiers", [])],
        ref_name=data.get("ref_name"),
        template=data.get("template"),
        source_span=tuple(data.get("source_span", (0, 0))),
        flags=list(data.get("flags", [])),
    )
    validation = data.get("validation")
    if validation:
        cit.isbn_status = ValidationStatus(validation["isbn"])
        cit.doi_status = ValidationStatus(validation["doi"])
        cit.google_books_status = ValidationStatus(validation["google_books"])
        if data.get("resolver"):
            cit.resolver_record = ResolverRecord.from_dict(data["resolver"])
        if data.get("oa_status"):
            cit.oa_status = OaStatus(data["oa_status"])
    return cit


def dumps_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n"


def write_citations(citations: Iterable[Citation], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for cit in citations:
            f.write(dumps_line(citation_to_dict(cit)))
            n += 1
    return n


def read_citations(path: str | Path) -> Iterator[Citation]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield citation_from_dict(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad citation record: {exc}") from exc


def group_by_article(citations: Iterable[Citation]) -> dict[str, list[Citation]]:
    """Citations grouped by title, titles in first-seen order."""
    groups: dict[str, list[Citation]] = {}
    for cit in citations:
        groups.setdefault(cit.article_title, []).append(cit)
    return groups


def _fmt(value: float | None) -> str:
    return "" if value is None else FLOAT_FORMAT.format(value)


def write_csv(path: str | Path, header: list[str], rows: Iterable[Iterable]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


SCORE_HEADER = ["title", "model_id", "score", *COMPONENTS]


def write_scores(scores: list[ArticleScore], path: str | Path) -> None:
    rows = (
        [s.title, s.model_id, _fmt(s.score), *(_fmt(v) for v in s.proportions.as_tuple())]
        for s in sorted(scores, key=lambda s: s.title)
    )
    write_csv(path, SCORE_HEADER, rows)


def read_scores(path: str | Path) -> list[ArticleScore]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = set(SCORE_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        out = []
        for row in reader:
            props = ComponentProportions(
                *(float(row[c]) if row[c] != "" else None for c in COMPONENTS)
            )
            out.append(ArticleScore(row["title"], row["model_id"], float(row["score"]), props))
    return out


RANKING_HEADER = ["rank", "title", "score", "tie_group"]


def write_ranking(ranking: Ranking, path: str | Path) -> None:
    rows = ([e.rank, e.title, _fmt(e.score), e.tie_group] for e in ranking.entries)
    write_csv(path, RANKING_HEADER, rows)


def read_ranking(path: str | Path, model_id: str | None = None) -> Ranking:
    from citeaudit.ranking import RankEntry

    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        entries = tuple(
            RankEntry(r["title"], float(r["score"]), int(r["rank"]), int(r["tie_group"]))
            for r in reader
        )
    entries = tuple(sorted(entries, key=lambda e: e.rank))
    return Ranking(model_id or Path(path).stem.removeprefix("ranking_"), entries)


def write_comparison(cmp: RankComparison, path: str | Path) -> None:
    write_csv(
        path,
        ["title", "rank_base", "rank_other", "delta"],
        ([r.title, r.rank_base, r.rank_other, r.delta] for r in cmp.rows),
    )


def write_movers(report: MoversReport, path: str | Path) -> None:
    rows = [[r.title, r.rank_base, r.rank_other, r.delta, "gainer"] for r in report.top_gainers]
    rows += [[r.title, r.rank_base, r.rank_other, r.delta, "loser"] for r in report.top_losers]
    write_csv(path, ["title", "rank_base", "rank_other", "delta", "direction"], rows)


def write_scatter(cmp: RankComparison, path: str | Path) -> None:
    write_csv(path, ["rank_base", "rank_other", "title"], scatter_data(cmp))


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
