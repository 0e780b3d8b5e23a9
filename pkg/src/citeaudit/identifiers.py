"""Standardized identifiers found in citations: ISBN, DOI, Google Books ID
and open-access links, with normalization and validation.

Validation here is purely syntactic (check digits, DOI shape). Whether a
Google Books volume actually exists is decided by a resolver, see
:mod:`citeaudit.access`.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass
from enum import Enum
from typing import Union
from urllib.parse import parse_qs, unquote, urlsplit


class NotAnIsbn(ValueError):
    """Raised when text cannot be read as a 10- or 13-character ISBN."""


class ValidationStatus(str, Enum):
    VALID = "valid"
    INVALID = "invalid"
    ABSENT = "absent"
    UNCHECKED = "unchecked"


class HostClass(str, Enum):
    ARXIV = "arxiv"
    PMC = "pmc"


@dataclass(frozen=True)
class Isbn:
    raw: str
    # None when the raw text is garbled beyond normalization
    normalized: str | None = None
    form: int | None = None

    @classmethod
    def from_raw(cls, raw: str) -> Isbn:
        try:
            digits = normalize_isbn(raw)
        except NotAnIsbn:
            return cls(raw)
        return cls(raw, digits, len(digits))


@dataclass(frozen=True)
class Doi:
    raw: str
    normalized: str


@dataclass(frozen=True)
class GoogleBooksId:
    id: str

    def __post_init__(self) -> None:
        if not _GB_ID_RE.fullmatch(self.id):
            raise ValueError(f"not a Google Books volume id: {self.id!r}")


@dataclass(frozen=True)
class OpenAccessLink:
    host_class: HostClass
    raw_url: str


Identifier = Union[Isbn, Doi, GoogleBooksId, OpenAccessLink]


# -- ISBN ---------------------------------------------------------------------

_ISBN_LABEL_RE = re.compile(r"^\s*ISBN(?:[-\s]?1[03])?\s*:?\s*", re.IGNORECASE)
_ISBN10_RE = re.compile(r"\d{9}[\dX]")
_ISBN13_RE = re.compile(r"\d{13}")


def normalize_isbn(raw: str) -> str:
    """Strip the optional ``ISBN`` label, hyphens and spaces.

    >>> normalize_isbn("ISBN 0-306-40615-2")
    '0306406152'
    """
    text = _ISBN_LABEL_RE.sub("", raw)
    # U+2010..U+2015 show up in pasted ISBNs as often as ASCII hyphens
    digits = re.sub(r"[\s\-‐-―]", "", text).upper()
    if _ISBN13_RE.fullmatch(digits) or _ISBN10_RE.fullmatch(digits):
        return digits
    raise NotAnIsbn(raw)


def checksum_isbn10(digits: str) -> ValidationStatus:
    if not _ISBN10_RE.fullmatch(digits):
        raise NotAnIsbn(digits)
    total = sum(
        (10 - i) * (10 if ch == "X" else int(ch)) for i, ch in enumerate(digits)
    )
    return ValidationStatus.VALID if total % 11 == 0 else ValidationStatus.INVALID


def checksum_isbn13(digits: str) -> ValidationStatus:
    if not _ISBN13_RE.fullmatch(digits):
        raise NotAnIsbn(digits)
    total = sum((3 if i % 2 else 1) * int(ch) for i, ch in enumerate(digits))
    return ValidationStatus.VALID if total % 10 == 0 else ValidationStatus.INVALID


def validate_isbn(raw: str) -> ValidationStatus:
    """Valid or Invalid, never Absent: garbled ISBN text is an invalid ISBN."""
    try:
        digits = normalize_isbn(raw)
    except NotAnIsbn:
        return ValidationStatus.INVALID
    if len(digits) == 13:
        return checksum_isbn13(digits)
    return checksum_isbn10(digits)


# -- DOI ----------------------------------------------------------------------

_DOI_PREFIX_RE = re.compile(
    r"^\s*(?:doi:\s*|https?://(?:dx\.)?doi\.org/|(?:dx\.)?doi\.org/)", re.IGNORECASE
)
_DOI_RE = re.compile(r"10\.\d{4,}(?:\.\d+)*/\S+")


def strip_doi(raw: str) -> str:
    text = _DOI_PREFIX_RE.sub("", raw.strip())
    return unquote(text).strip()


def validate_doi_syntax(raw: str) -> ValidationStatus:
    if _DOI_RE.fullmatch(strip_doi(raw)):
        return ValidationStatus.VALID
    return ValidationStatus.INVALID


def make_doi(raw: str) -> Doi:
    # DOIs are case-insensitive; lowercasing makes equal DOIs compare equal
    return Doi(raw, strip_doi(raw).lower())


# -- URLs ---------------------------------------------------------------------

_GB_ID_RE = re.compile(r"[A-Za-z0-9_-]+")
_GB_HOST_RE = re.compile(r"^books\.google\.[a-z.]+$")
_GOOGLE_HOST_RE = re.compile(r"^(?:www\.)?google\.[a-z.]+$")


def _split_url(url: str):
    url = html.unescape(url.strip())
    if "://" not in url:
        url = "http://" + url.lstrip("/")
    try:
        return urlsplit(url)
    except ValueError:
        return None


def extract_google_books_id(url: str) -> GoogleBooksId | None:
    """Return the volume id embedded in a Google Books URL, or None.

    Both the classic ``books?id=`` form and the newer
    ``/books/edition/<title>/<id>`` form are recognized.
    """
    parts = _split_url(url)
    if parts is None:
        return None
    host = (parts.hostname or "").lower()
    path = parts.path
    if _GB_HOST_RE.match(host):
        pass
    elif _GOOGLE_HOST_RE.match(host) and path.startswith("/books"):
        pass
    else:
        return None

    for value in parse_qs(parts.query).get("id", []):
        if _GB_ID_RE.fullmatch(value):
            return GoogleBooksId(value)
    segments = [s for s in path.split("/") if s]
    if len(segments) >= 4 and segments[:2] == ["books", "edition"]:
        if _GB_ID_RE.fullmatch(segments[3]):
            return GoogleBooksId(segments[3])
    return None


@dataclass(frozen=True)
class OaHostRule:
    """One recognized open-access host.

    A URL matches when its host ends with ``host`` and its path starts with
    ``path_prefix``. A citation parameter named in ``params`` with a
    non-empty value also counts as a link to this host.
    """

    host_class: HostClass
    host: str
    path_prefix: str = ""
    params: tuple[str, ...] = ()


DEFAULT_OA_HOSTS: tuple[OaHostRule, ...] = (
    OaHostRule(HostClass.ARXIV, "arxiv.org", "", ("arxiv", "eprint")),
    OaHostRule(HostClass.PMC, "ncbi.nlm.nih.gov", "/pmc", ("pmc",)),
    OaHostRule(HostClass.PMC, "pmc.ncbi.nlm.nih.gov", "", ("pmc",)),
    OaHostRule(HostClass.PMC, "europepmc.org", "/articles/pmc", ()),
)


def match_open_access_url(
    url: str, hosts: tuple[OaHostRule, ...] = DEFAULT_OA_HOSTS
) -> OpenAccessLink | None:
    parts = _split_url(url)
    if parts is None:
        return None
    host = (parts.hostname or "").lower()
    path = parts.path.lower()
    for rule in hosts:
        if (host == rule.host or host.endswith("." + rule.host)) and path.startswith(
            rule.path_prefix
        ):
            return OpenAccessLink(rule.host_class, url.strip())
    return None


def identifier_to_dict(ident: Identifier) -> dict:
    if isinstance(ident, Isbn):
        return {
            "type": "isbn",
            "raw": ident.raw,
            "normalized": ident.normalized,
            "form": ident.form,
        }
    if isinstance(ident, Doi):
        return {"type": "doi", "raw": ident.raw, "normalized": ident.normalized}
    if isinstance(ident, GoogleBooksId):
        return {"type": "google_books", "id": ident.id}
    return {
        "type": "open_access",
        "host_class": ident.host_class.value,
        "raw_url": ident.raw_url,
    }


def identifier_from_dict(data: dict) -> Identifier:
    kind = data["type"]
    if kind == "isbn":
        return Isbn(data["raw"], data.get("normalized"), data.get("form"))
    if kind == "doi":
        return Doi(data["raw"], data["normalized"])
    if kind == "google_books":
        return GoogleBooksId(data["id"])
    if kind == "open_access":
        return OpenAccessLink(HostClass(data["host_class"]), data["raw_url"])
    raise ValueError(f"unknown identifier type {kind!r}")
