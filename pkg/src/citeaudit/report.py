"""Category tallies behind the citation-breakdown report."""

from __future__ import annotations

from collections import Counter
from typing import Iterable

from citeaudit.access import OaStatus, Viewability
from citeaudit.identifiers import ValidationStatus
from citeaudit.wikitext import Citation, CitationKind


def extraction_summary(articles_processed: int, citations: Iterable[Citation]) -> dict:
    by_kind: Counter = Counter()
    by_anchoring: Counter = Counter()
    by_pair: Counter = Counter()
    articles: set[str] = set()
    total = 0
    for cit in citations:
        total += 1
        articles.add(cit.article_title)
        by_kind[cit.kind.value] += 1
        by_anchoring[cit.anchoring.value] += 1
        by_pair[f"{cit.kind.value}/{cit.anchoring.value}"] += 1
    return {
        "articles_processed": articles_processed,
        "articles_with_citations": len(articles),
        "citations_total": total,
        "by_kind": {k.value: by_kind[k.value] for k in CitationKind},
        "by_anchoring": {"inline": by_anchoring["inline"], "free": by_anchoring["free"]},
        "by_kind_and_anchoring": dict(sorted(by_pair.items())),
    }


def validation_tallies(citations: Iterable[Citation]) -> dict:
    """Counts for every category of the verifiability breakdown.

    ``book_identifiers`` folds working Google Books volumes into the ISBN
    picture: a book is ``valid`` if it has a valid ISBN or a working volume
    link, ``invalid`` if it carries identifiers none of which is valid,
    ``unresolved`` if its only candidate is a volume the resolver could not
    decide, and ``absent`` otherwise. ``all_identifiers`` applies the same
    rule to books plus every other citation that links to Google Books.
    """
    t = {
        "citations_total": 0,
        "books": Counter(),
        "google_books": Counter(),
        "viewability": Counter(),
        "book_identifiers": Counter(),
        "all_identifiers": Counter(),
        "journals": Counter(),
    }
    for cit in citations:
        t["citations_total"] += 1
        is_book = cit.kind is CitationKind.BOOK
        gb = cit.google_books_status
        rec = cit.resolver_record

        if is_book:
            t["books"]["total"] += 1
            t["books"]["isbn_" + cit.isbn_status.value] += 1

        if cit.google_books_id is not None:
            t["google_books"]["total"] += 1
            if rec is None or not rec.known:
                t["google_books"]["unknown"] += 1
            elif rec.exists:
                t["google_books"]["valid"] += 1
                t["viewability"][rec.viewability.value] += 1
            else:
                t["google_books"]["invalid"] += 1

        if is_book or cit.google_books_id is not None:
            has_isbn = cit.isbn_status is not ValidationStatus.ABSENT and is_book
            if (is_book and cit.isbn_status is ValidationStatus.VALID) or gb is ValidationStatus.VALID:
                bucket = "valid"
            elif has_isbn or gb is ValidationStatus.INVALID:
                bucket = "invalid"
            elif gb is ValidationStatus.UNCHECKED:
                bucket = "unresolved"
            else:
                bucket = "absent"
            t["all_identifiers"][bucket] += 1
            t["all_identifiers"]["total"] += 1
            if is_book:
                t["book_identifiers"][bucket] += 1
                t["book_identifiers"]["total"] += 1

        if cit.kind is CitationKind.JOURNAL:
            t["journals"]["total"] += 1
            t["journals"]["doi_" + cit.doi_status.value] += 1
            t["journals"][cit.oa_status.value] += 1

    keys = {
        "books": ["total", "isbn_valid", "isbn_invalid", "isbn_absent"],
        "google_books": ["total", "valid", "invalid", "unknown"],
        "viewability": [v.value for v in Viewability if v is not Viewability.UNKNOWN],
        "book_identifiers": ["total", "valid", "invalid", "absent", "unresolved"],
        "all_identifiers": ["total", "valid", "invalid", "absent", "unresolved"],
        "journals": [
            "total",
            "doi_valid",
            "doi_invalid",
            "doi_absent",
            *(s.value for s in OaStatus),
        ],
    }
    out: dict = {"citations_total": t["citations_total"]}
    for group, names in keys.items():
        out[group] = {name: t[group][name] for name in names}
    return out


def _pct(part: int, whole: int) -> str:
    return f"{100.0 * part / whole:5.1f}%" if whole else "    -"


def format_tallies(tallies: dict) -> str:
    lines = [f"citations: {tallies['citations_total']}"]
    denominators = {
        "books": "total",
        "google_books": "total",
        "book_identifiers": "total",
        "all_identifiers": "total",
        "journals": "total",
    }
    for group in ("books", "book_identifiers", "all_identifiers", "google_books", "viewability", "journals"):
        counts = tallies[group]
        whole = counts.get(denominators.get(group, ""), sum(counts.values()))
        lines.append(f"{group}:")
        for name, value in counts.items():
            if name == "total":
                lines.append(f"  {name:<24}{value:>8}")
            else:
                lines.append(f"  {name:<24}{value:>8}  {_pct(value, whole)}")
    return "\n".join(lines)


def format_summary(summary: dict) -> str:
    lines = [
        f"articles processed:      {summary['articles_processed']}",
        f"articles with citations: {summary['articles_with_citations']}",
        f"citations:               {summary['citations_total']}",
    ]
    for kind, n in summary["by_kind"].items():
        lines.append(f"  {kind:<10}{n:>8}")
    for anchoring, n in summary["by_anchoring"].items():
        lines.append(f"  {anchoring:<10}{n:>8}")
    return "\n".join(lines)
