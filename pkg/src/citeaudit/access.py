"""Practical accessibility: Google Books resolution and open-access status.

Resolvers share one interface. :class:`FixtureResolver` replays recorded
answers from a JSON-lines file and is what every test uses;
:class:`LiveResolver` asks the Google Books volumes API. Either is wrapped
in :class:`CachingResolver` so a run looks each volume id up once.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from citeaudit.identifiers import (
    DEFAULT_OA_HOSTS,
    GoogleBooksId,
    OaHostRule,
    ValidationStatus,
    validate_doi_syntax,
    validate_isbn,
)
from citeaudit.wikitext import Citation, CitationKind

log = logging.getLogger(__name__)

DEFAULT_VOLUMES_ENDPOINT = "https://www.googleapis.com/books/v1/volumes"


class Viewability(str, Enum):
    FULL = "full"
    PARTIAL = "partial"
    NONE = "none"
    UNKNOWN = "unknown"


class OaStatus(str, Enum):
    CONFIRMED_OPEN = "confirmed_open"
    IDENTIFIER_UNCONFIRMED = "identifier_unconfirmed"
    NO_IDENTIFIER = "no_identifier"


class ResolverConfigError(Exception):
    """A resolver could not be set up (bad fixture file, missing key...)."""


class ContractViolation(ValueError):
    pass


@dataclass(frozen=True)
class ResolverRecord:
    google_books_id: str
    # None: existence could not be determined
    exists: bool | None
    viewability: Viewability = Viewability.UNKNOWN
    retryable: bool = False

    @property
    def known(self) -> bool:
        return self.exists is False or (
            self.exists is True and self.viewability is not Viewability.UNKNOWN
        )

    def to_dict(self) -> dict:
        return {
            "id": self.google_books_id,
            "exists": self.exists,
            "viewability": self.viewability.value,
            "retryable": self.retryable,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ResolverRecord:
        return cls(
            data["id"],
            data.get("exists"),
            Viewability(data.get("viewability", "unknown")),
            bool(data.get("retryable", False)),
        )


def unknown_record(gbid: str, retryable: bool = False) -> ResolverRecord:
    return ResolverRecord(gbid, None, Viewability.UNKNOWN, retryable)


class Resolver(ABC):
    @abstractmethod
    def lookup(self, gbid: str) -> ResolverRecord:
        """Resolve one volume id. Must not raise for per-id failures."""

    def lookup_many(self, ids: Iterable[str]) -> dict[str, ResolverRecord]:
        return {gbid: self.lookup(gbid) for gbid in dict.fromkeys(ids)}


class FixtureResolver(Resolver):
    """Recorded answers, one JSON object per line: ``{id, exists, viewability}``.

    Any unparsable line fails at construction time, never during lookups.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.records: dict[str, ResolverRecord] = {}
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ResolverConfigError(f"cannot read resolver fixture {path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = self._parse(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ResolverConfigError(f"{path}:{lineno}: bad fixture record: {exc}") from exc
            self.records[record.google_books_id] = record

    @staticmethod
    def _parse(data: dict) -> ResolverRecord:
        gbid = data["id"]
        GoogleBooksId(gbid)
        exists = data["exists"]
        if not isinstance(exists, bool):
            raise TypeError("'exists' must be a boolean")
        if not exists:
            return ResolverRecord(gbid, False, Viewability.UNKNOWN)
        view = Viewability(data["viewability"])
        if view is Viewability.UNKNOWN:
            raise ValueError("viewability must be full, partial or none")
        return ResolverRecord(gbid, True, view)

    def lookup(self, gbid: str) -> ResolverRecord:
        return self.records.get(gbid) or unknown_record(gbid)


_API_VIEWABILITY = {
    "ALL_PAGES": Viewability.FULL,
    "PARTIAL": Viewability.PARTIAL,
    "NO_PAGES": Viewability.NONE,
}


class LiveResolver(Resolver):
    """Google Books volumes API client with a request-rate cap.

    ``rate_per_second`` bounds requests across all threads; ``batch_size``
    bounds how many lookups ``lookup_many`` keeps in flight.
    """

    def __init__(
        self,
        api_key: str | None = None,
        endpoint: str = DEFAULT_VOLUMES_ENDPOINT,
        rate_per_second: float = 5.0,
        batch_size: int = 8,
        timeout: float = 20.0,
        client=None,
    ):
        import httpx

        if rate_per_second <= 0:
            raise ResolverConfigError("rate_per_second must be positive")
        self.api_key = api_key
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = max(1, batch_size)
        self._interval = 1.0 / rate_per_second
        self._next_slot = 0.0
        self._lock = threading.Lock()
        self._client = client or httpx.Client(timeout=timeout)

    def _wait_for_slot(self) -> None:
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next_slot)
            self._next_slot = slot + self._interval
        if slot > now:
            time.sleep(slot - now)

    def lookup(self, gbid: str) -> ResolverRecord:
        import httpx

        self._wait_for_slot()
        params = {"key": self.api_key} if self.api_key else None
        try:
            resp = self._client.get(f"{self.endpoint}/{gbid}", params=params)
        except httpx.HTTPError as exc:
            log.warning("google books lookup %s failed: %s", gbid, exc)
            return unknown_record(gbid, retryable=True)
        if resp.status_code in (400, 404):
            return ResolverRecord(gbid, False)
        if resp.status_code != 200:
            return unknown_record(gbid, retryable=resp.status_code in (429, 500, 502, 503, 504))
        try:
            raw = resp.json().get("accessInfo", {}).get("viewability")
        except ValueError:
            return unknown_record(gbid, retryable=True)
        return ResolverRecord(gbid, True, _API_VIEWABILITY.get(raw, Viewability.UNKNOWN))

    def lookup_many(self, ids: Iterable[str]) -> dict[str, ResolverRecord]:
        unique = list(dict.fromkeys(ids))
        with ThreadPoolExecutor(max_workers=self.batch_size) as pool:
            return dict(zip(unique, pool.map(self.lookup, unique)))

    def close(self) -> None:
        self._client.close()


class CachingResolver(Resolver):
    """Memoizes another resolver; ``calls`` counts underlying lookups."""

    def __init__(self, inner: Resolver):
        self.inner = inner
        self.cache: dict[str, ResolverRecord] = {}
        self.calls = 0
        self._lock = threading.Lock()
        self._inflight: dict[str, threading.Event] = {}

    def lookup(self, gbid: str) -> ResolverRecord:
        with self._lock:
            if gbid in self.cache:
                return self.cache[gbid]
            event = self._inflight.get(gbid)
            owner = event is None
            if owner:
                event = self._inflight[gbid] = threading.Event()
                self.calls += 1
        if not owner:
            event.wait()
            return self.cache[gbid]
        try:
            record = self.inner.lookup(gbid)
        except Exception:
            record = unknown_record(gbid, retryable=True)
        with self._lock:
            self.cache[gbid] = record
            del self._inflight[gbid]
        event.set()
        return record

    def lookup_many(self, ids: Iterable[str]) -> dict[str, ResolverRecord]:
        unique = list(dict.fromkeys(ids))
        with self._lock:
            missing = [i for i in unique if i not in self.cache and i not in self._inflight]
        if missing:
            fetched = self.inner.lookup_many(missing)
            with self._lock:
                for gbid in missing:
                    if gbid not in self.cache:
                        self.calls += 1
                        self.cache[gbid] = fetched.get(gbid) or unknown_record(gbid, True)
        return {gbid: self.lookup(gbid) for gbid in unique}


def resolve_google_books(gbid: GoogleBooksId | str, resolver: Resolver) -> ResolverRecord:
    key = gbid.id if isinstance(gbid, GoogleBooksId) else gbid
    return resolver.lookup(key)


def write_fixture(records: Iterable[ResolverRecord], path: str | Path) -> None:
    """Record resolver answers so a later run can replay them offline.

    Undetermined records are left out; replaying them yields Unknown anyway.
    """
    lines = []
    for rec in sorted(records, key=lambda r: r.google_books_id):
        if rec.exists is None or (rec.exists and rec.viewability is Viewability.UNKNOWN):
            continue
        data = {"id": rec.google_books_id, "exists": rec.exists}
        if rec.exists:
            data["viewability"] = rec.viewability.value
        lines.append(json.dumps(data, sort_keys=True))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _matches_oa(citation: Citation, hosts: tuple[OaHostRule, ...]) -> bool:
    classes = {rule.host_class for rule in hosts}
    if any(link.host_class in classes for link in citation.open_access_links):
        return True
    for rule in hosts:
        for key in rule.params:
            if citation.params.get(key, "").strip():
                return True
    return False


def classify_open_access(
    citation: Citation, hosts: tuple[OaHostRule, ...] = DEFAULT_OA_HOSTS
) -> OaStatus:
    if citation.kind is not CitationKind.JOURNAL:
        raise ContractViolation(
            f"open-access status is only defined for journal citations, got "
            f"{citation.kind.value} in {citation.article_title!r}"
        )
    if _matches_oa(citation, hosts):
        return OaStatus.CONFIRMED_OPEN
    doi = citation.doi
    if doi is not None and validate_doi_syntax(doi.raw) is ValidationStatus.VALID:
        return OaStatus.IDENTIFIER_UNCONFIRMED
    return OaStatus.NO_IDENTIFIER


def annotate(
    citations: list[Citation],
    resolver: Resolver | None,
    hosts: tuple[OaHostRule, ...] = DEFAULT_OA_HOSTS,
) -> list[Citation]:
    """Attach validation statuses, resolver records and OA status in place.

    Without a resolver, Google Books ids are marked Unchecked.
    """
    gb_ids = [c.google_books_id.id for c in citations if c.google_books_id is not None]
    records = resolver.lookup_many(gb_ids) if (resolver is not None and gb_ids) else {}

    for cit in citations:
        isbn = cit.isbn
        cit.isbn_status = ValidationStatus.ABSENT if isbn is None else validate_isbn(isbn.raw)
        doi = cit.doi
        cit.doi_status = ValidationStatus.ABSENT if doi is None else validate_doi_syntax(doi.raw)
        gbid = cit.google_books_id
        if gbid is None:
            cit.google_books_status = ValidationStatus.ABSENT
            cit.resolver_record = None
        elif resolver is None:
            cit.google_books_status = ValidationStatus.UNCHECKED
            cit.resolver_record = None
        else:
            rec = records[gbid.id]
            cit.resolver_record = rec
            if rec.exists is None:
                cit.google_books_status = ValidationStatus.UNCHECKED
            else:
                cit.google_books_status = (
                    ValidationStatus.VALID if rec.exists else ValidationStatus.INVALID
                )
        cit.oa_status = (
            classify_open_access(cit, hosts) if cit.kind is CitationKind.JOURNAL else None
        )
    return citations
