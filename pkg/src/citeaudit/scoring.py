"""Per-article verifiability profiles and weighted scores."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Iterable

from citeaudit.access import ContractViolation, OaStatus, Viewability
from citeaudit.identifiers import ValidationStatus
from citeaudit.wikitext import Citation, CitationKind

COMPONENTS: tuple[str, ...] = (
    "isbn_valid",
    "gb_valid",
    "journal_doi",
    "book_identifier",
    "journal_oa",
    "gb_full",
    "gb_partial",
)


class ZeroDenominatorPolicy(str, Enum):
    ZERO = "zero"
    ONE = "one"
    RENORMALIZE = "renormalize"


@dataclass
class ArticleProfile:
    title: str
    books_total: int = 0
    isbns_present: int = 0
    isbns_valid: int = 0
    books_with_any_identifier: int = 0
    gb_links_total: int = 0
    gb_valid: int = 0
    gb_full: int = 0
    gb_partial: int = 0
    gb_none: int = 0
    # links whose resolver answer was missing; outside every GB denominator
    gb_unknown: int = 0
    journals_total: int = 0
    journals_with_doi: int = 0
    journals_confirmed_oa: int = 0
    journals_no_identifier: int = 0

    def check(self) -> None:
        ok = (
            self.isbns_valid <= self.isbns_present <= self.books_total
            and self.gb_full + self.gb_partial + self.gb_none == self.gb_valid
            and self.gb_valid <= self.gb_links_total
            and self.journals_confirmed_oa + self.journals_no_identifier <= self.journals_total
            and self.journals_with_doi <= self.journals_total
            and self.books_with_any_identifier <= self.books_total
        )
        if not ok:
            raise AssertionError(f"inconsistent profile: {self}")


@dataclass(frozen=True)
class ComponentProportions:
    """Seven proportions in [0, 1]; None marks a component excluded by the
    renormalize policy."""

    isbn_valid: float | None
    gb_valid: float | None
    journal_doi: float | None
    book_identifier: float | None
    journal_oa: float | None
    gb_full: float | None
    gb_partial: float | None

    def as_tuple(self) -> tuple[float | None, ...]:
        return tuple(getattr(self, name) for name in COMPONENTS)


@dataclass(frozen=True)
class ScoreModel:
    model_id: str
    isbn_valid: float
    gb_valid: float
    journal_doi: float
    book_identifier: float
    journal_oa: float
    gb_full: float
    gb_partial: float
    zero_denominator_policy: ZeroDenominatorPolicy = ZeroDenominatorPolicy.ZERO

    def __post_init__(self) -> None:
        weights = self.weights
        if any(w < 0 for w in weights):
            raise ValueError(f"model {self.model_id}: weights must be non-negative")
        if not any(w > 0 for w in weights):
            raise ValueError(f"model {self.model_id}: at least one weight must be positive")

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in COMPONENTS)

    def scaled(self, factor: float, model_id: str | None = None) -> ScoreModel:
        return ScoreModel(
            model_id or self.model_id,
            *(w * factor for w in self.weights),
            zero_denominator_policy=self.zero_denominator_policy,
        )

    def with_policy(self, policy: ZeroDenominatorPolicy) -> ScoreModel:
        return ScoreModel(self.model_id, *self.weights, zero_denominator_policy=policy)

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "weights": {f"w_{name}": w for name, w in zip(COMPONENTS, self.weights)},
            "zero_denominator_policy": self.zero_denominator_policy.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ScoreModel:
        weights = data["weights"]
        unknown = set(weights) - {f"w_{name}" for name in COMPONENTS}
        if unknown:
            raise ValueError(f"unknown weight names: {sorted(unknown)}")
        return cls(
            str(data["model_id"]),
            *(float(weights.get(f"w_{name}", 0.0)) for name in COMPONENTS),
            zero_denominator_policy=ZeroDenominatorPolicy(
                data.get("zero_denominator_policy", "zero")
            ),
        )

    @classmethod
    def load(cls, path: str | Path) -> ScoreModel:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ArticleScore:
    title: str
    model_id: str
    score: float
    proportions: ComponentProportions


def preset_models() -> list[ScoreModel]:
    # isbn, gb valid, journal doi, book id, journal oa, gb full, gb partial
    return [
        ScoreModel("model1", 1, 1, 0, 0, 1, 1, 0.5),
        ScoreModel("model2", 2, 2, 0, 0, 1, 1, 0.5),
        ScoreModel("model3", 1, 1, 0, 0, 2, 2, 1),
        ScoreModel("model4", 1, 1, 1, 1, 1, 1, 0.5),
    ]


PRESET_NAMES = tuple(m.model_id for m in preset_models())


def get_preset(name: str) -> ScoreModel:
    for model in preset_models():
        if model.model_id == name:
            return model
    raise KeyError(name)


def _require(cit: Citation, attr: str) -> None:
    if getattr(cit, attr) is None:
        raise ContractViolation(
            f"citation {cit.template or 'bare'} at {cit.source_span} in "
            f"{cit.article_title!r} lacks {attr}; run validation first"
        )


def build_profile(title: str, citations: Iterable[Citation]) -> ArticleProfile:
    """Count one article's annotated citations.

    ISBN counts cover Book citations. Google Books counts cover every
    citation with a volume id, whatever its kind; viewability is counted over
    volumes that exist. Journal counts cover Journal citations.
    """
    prof = ArticleProfile(title)
    for cit in citations:
        _require(cit, "isbn_status")
        _require(cit, "google_books_status")
        if cit.kind is CitationKind.JOURNAL:
            _require(cit, "oa_status")
            _require(cit, "doi_status")

        gb_working = False
        if cit.google_books_id is not None:
            rec = cit.resolver_record
            if rec is None or not rec.known:
                prof.gb_unknown += 1
            else:
                prof.gb_links_total += 1
                if rec.exists:
                    gb_working = True
                    prof.gb_valid += 1
                    if rec.viewability is Viewability.FULL:
                        prof.gb_full += 1
                    elif rec.viewability is Viewability.PARTIAL:
                        prof.gb_partial += 1
                    else:
                        prof.gb_none += 1

        if cit.kind is CitationKind.BOOK:
            prof.books_total += 1
            if cit.isbn_status is not ValidationStatus.ABSENT:
                prof.isbns_present += 1
            isbn_ok = cit.isbn_status is ValidationStatus.VALID
            prof.isbns_valid += isbn_ok
            prof.books_with_any_identifier += isbn_ok or gb_working

        elif cit.kind is CitationKind.JOURNAL:
            prof.journals_total += 1
            prof.journals_with_doi += cit.doi_status is ValidationStatus.VALID
            prof.journals_confirmed_oa += cit.oa_status is OaStatus.CONFIRMED_OPEN
            prof.journals_no_identifier += cit.oa_status is OaStatus.NO_IDENTIFIER
    prof.check()
    return prof


def compute_proportions(
    profile: ArticleProfile,
    policy: ZeroDenominatorPolicy = ZeroDenominatorPolicy.ZERO,
) -> ComponentProportions:
    empty = {
        ZeroDenominatorPolicy.ZERO: 0.0,
        ZeroDenominatorPolicy.ONE: 1.0,
        ZeroDenominatorPolicy.RENORMALIZE: None,
    }[ZeroDenominatorPolicy(policy)]

    def ratio(num: int, den: int) -> float | None:
        return num / den if den else empty

    p = profile
    return ComponentProportions(
        isbn_valid=ratio(p.isbns_valid, p.isbns_present),
        gb_valid=ratio(p.gb_valid, p.gb_links_total),
        journal_doi=ratio(p.journals_with_doi, p.journals_total),
        book_identifier=ratio(p.books_with_any_identifier, p.books_total),
        journal_oa=ratio(p.journals_confirmed_oa, p.journals_total),
        gb_full=ratio(p.gb_full, p.gb_valid),
        gb_partial=ratio(p.gb_partial, p.gb_valid),
    )


def score(
    proportions: ComponentProportions, model: ScoreModel, title: str = ""
) -> ArticleScore:
    total = 0.0
    for weight, value in zip(model.weights, proportions.as_tuple()):
        if value is not None:
            total += weight * value
    return ArticleScore(title, model.model_id, total, proportions)


def score_article(profile: ArticleProfile, model: ScoreModel) -> ArticleScore:
    props = compute_proportions(profile, model.zero_denominator_policy)
    return score(props, model, profile.title)


def profile_to_dict(profile: ArticleProfile) -> dict:
    return asdict(profile)


PROFILE_FIELDS = tuple(f.name for f in fields(ArticleProfile))
