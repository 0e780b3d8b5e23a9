import json
import threading
import time

import httpx
import pytest

from citeaudit.access import (
    CachingResolver,
    ContractViolation,
    FixtureResolver,
    LiveResolver,
    OaStatus,
    Resolver,
    ResolverConfigError,
    ResolverRecord,
    Viewability,
    annotate,
    classify_open_access,
    resolve_google_books,
    unknown_record,
    write_fixture,
)
from citeaudit.identifiers import GoogleBooksId, ValidationStatus
from citeaudit.wikitext import CitationKind, WikiPage, extract_citations


def write_lines(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return path


@pytest.fixture
def fixture_file(tmp_path):
    return write_lines(
        tmp_path / "gb.jsonl",
        [
            {"id": "zyTCAlFPjgYC", "exists": True, "viewability": "full"},
            {"id": "Gone1", "exists": False},
            {"id": "Part1", "exists": True, "viewability": "partial"},
        ],
    )


class TestFixtureResolver:
    def test_lookups(self, fixture_file):
        res = FixtureResolver(fixture_file)
        assert resolve_google_books(GoogleBooksId("zyTCAlFPjgYC"), res) == ResolverRecord(
            "zyTCAlFPjgYC", True, Viewability.FULL
        )
        gone = res.lookup("Gone1")
        assert gone.exists is False and gone.known
        missing = res.lookup("Missing")
        assert missing.exists is None and missing.viewability is Viewability.UNKNOWN
        assert not missing.known

    @pytest.mark.parametrize(
        "line",
        [
            "{not json",
            json.dumps({"exists": True, "viewability": "full"}),
            json.dumps({"id": "a", "exists": "yes"}),
            json.dumps({"id": "a", "exists": True, "viewability": "sometimes"}),
            json.dumps({"id": "a", "exists": True}),
            json.dumps({"id": "bad id", "exists": False}),
        ],
    )
    def test_malformed_fails_at_load(self, tmp_path, line):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"id": "ok", "exists": False}) + "\n" + line + "\n")
        with pytest.raises(ResolverConfigError, match=":2:"):
            FixtureResolver(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ResolverConfigError):
            FixtureResolver(tmp_path / "nope.jsonl")


class CountingResolver(Resolver):
    def __init__(self, delay=0.0):
        self.seen = []
        self.delay = delay
        self._lock = threading.Lock()

    def lookup(self, gbid):
        with self._lock:
            self.seen.append(gbid)
        time.sleep(self.delay)
        return ResolverRecord(gbid, True, Viewability.NONE)


class TestCaching:
    def test_distinct_calls(self):
        inner = CountingResolver()
        cache = CachingResolver(inner)
        ids = ["a", "b", "a", "c", "b", "a"]
        for gbid in ids:
            cache.lookup(gbid)
        cache.lookup_many(ids)
        assert cache.calls == 3
        assert sorted(inner.seen) == ["a", "b", "c"]

    def test_concurrent_lookups_hit_inner_once(self):
        inner = CountingResolver(delay=0.02)
        cache = CachingResolver(inner)
        threads = [threading.Thread(target=cache.lookup, args=(f"id{i % 4}",)) for i in range(32)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert cache.calls == 4
        assert sorted(inner.seen) == ["id0", "id1", "id2", "id3"]

    def test_inner_exception_becomes_unknown(self):
        class Boom(Resolver):
            def lookup(self, gbid):
                raise RuntimeError("down")

        rec = CachingResolver(Boom()).lookup("x")
        assert rec.exists is None and rec.retryable


def fake_books_api(table):
    def handler(request: httpx.Request) -> httpx.Response:
        gbid = request.url.path.rsplit("/", 1)[-1]
        status, body = table[gbid]
        return httpx.Response(status, json=body)

    return httpx.Client(transport=httpx.MockTransport(handler))


API = {
    "Full1": (200, {"accessInfo": {"viewability": "ALL_PAGES"}}),
    "Part1": (200, {"accessInfo": {"viewability": "PARTIAL"}}),
    "None1": (200, {"accessInfo": {"viewability": "NO_PAGES"}}),
    "Gone1": (404, {"error": {"code": 404}}),
    "Bad1": (400, {"error": {"code": 400}}),
    "Busy1": (503, {}),
    "Odd1": (200, {"accessInfo": {"viewability": "UNKNOWN"}}),
}


class TestLiveResolver:
    def test_mapping(self):
        live = LiveResolver(client=fake_books_api(API), rate_per_second=1000)
        got = live.lookup_many(API)
        assert got["Full1"].viewability is Viewability.FULL
        assert got["Part1"].viewability is Viewability.PARTIAL
        assert got["None1"].viewability is Viewability.NONE
        assert got["Gone1"].exists is False and got["Bad1"].exists is False
        assert got["Busy1"].exists is None and got["Busy1"].retryable
        assert got["Odd1"].exists is True and not got["Odd1"].known

    def test_network_error_is_retryable_unknown(self):
        def handler(request):
            raise httpx.ConnectError("no route")

        live = LiveResolver(client=httpx.Client(transport=httpx.MockTransport(handler)))
        rec = live.lookup("x")
        assert rec.exists is None and rec.retryable

    def test_rate_cap(self):
        live = LiveResolver(client=fake_books_api(API), rate_per_second=50, batch_size=4)
        start = time.monotonic()
        live.lookup_many(["Full1"] * 1 + ["Part1", "None1", "Gone1", "Bad1", "Odd1"])
        # six requests at 50/s need at least five intervals
        assert time.monotonic() - start >= 5 / 50 * 0.9

    def test_rejects_bad_rate(self):
        with pytest.raises(ResolverConfigError):
            LiveResolver(rate_per_second=0, client=fake_books_api(API))

    def test_recorded_fixture_replays_identically(self, tmp_path):
        live = LiveResolver(client=fake_books_api(API), rate_per_second=1000)
        answers = live.lookup_many(API)
        path = tmp_path / "rec.jsonl"
        write_fixture(answers.values(), path)
        replay = FixtureResolver(path)
        for gbid, rec in answers.items():
            again = replay.lookup(gbid)
            if rec.known:
                assert (again.exists, again.viewability) == (rec.exists, rec.viewability)
            else:
                assert not again.known


def cites(text):
    return extract_citations(WikiPage("T", 1, text))


class TestOpenAccess:
    @pytest.mark.parametrize(
        "template, status",
        [
            ("{{cite journal|doi=10.1000/1|arxiv=1234.5678}}", OaStatus.CONFIRMED_OPEN),
            ("{{cite journal|url=https://pmc.ncbi.nlm.nih.gov/articles/PMC1/}}", OaStatus.CONFIRMED_OPEN),
            ("{{cite journal|pmc=12345}}", OaStatus.CONFIRMED_OPEN),
            ("{{cite journal|doi=10.1000/1}}", OaStatus.IDENTIFIER_UNCONFIRMED),
            ("{{cite journal|doi=11.1000/1}}", OaStatus.NO_IDENTIFIER),
            ("{{cite journal|title=X}}", OaStatus.NO_IDENTIFIER),
            ("{{cite journal|pmc=}}", OaStatus.NO_IDENTIFIER),
        ],
    )
    def test_examples(self, template, status):
        (cit,) = cites(template)
        assert classify_open_access(cit) is status

    def test_non_journal_rejected(self):
        (cit,) = cites("{{cite book|isbn=0306406152}}")
        with pytest.raises(ContractViolation):
            classify_open_access(cit)

    def test_partition_of_corpus(self, corpus_path):
        from citeaudit.ingest import stream_dump_path

        journals = [
            c
            for p in stream_dump_path(corpus_path)
            for c in cites(p.wikitext)
            if c.kind is CitationKind.JOURNAL
        ]
        buckets = {s: 0 for s in OaStatus}
        for c in journals:
            buckets[classify_open_access(c)] += 1
        assert sum(buckets.values()) == len(journals) > 0


class TestAnnotate:
    TEXT = (
        "<ref>{{cite book|isbn=0306406152|url=https://books.google.com/books?id=zyTCAlFPjgYC}}</ref>"
        "<ref>{{cite web|url=https://books.google.com/books?id=Missing}}</ref>"
        "<ref>{{cite journal|doi=10.1000/1}}</ref>"
    )

    def test_with_resolver(self, fixture_file):
        book, web, journal = annotate(cites(self.TEXT), FixtureResolver(fixture_file))
        assert book.isbn_status is ValidationStatus.VALID
        assert book.google_books_status is ValidationStatus.VALID
        assert book.resolver_record.viewability is Viewability.FULL
        assert web.google_books_status is ValidationStatus.UNCHECKED
        assert journal.doi_status is ValidationStatus.VALID
        assert journal.oa_status is OaStatus.IDENTIFIER_UNCONFIRMED
        assert book.oa_status is None

    def test_without_resolver(self):
        book, web, _ = annotate(cites(self.TEXT), None)
        assert book.google_books_status is ValidationStatus.UNCHECKED
        assert book.resolver_record is None

    def test_unknown_record_helper(self):
        assert unknown_record("x") == ResolverRecord("x", None, Viewability.UNKNOWN, False)
