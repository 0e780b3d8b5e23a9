"""Dump streaming and pageview aggregation.

``stream_dump`` drives expat directly instead of ``ElementTree.iterparse``
for two reasons: expat reports the exact byte offset of a syntax error, and
a stream holding several concatenated export documents can be continued
where one document ends.
"""

from __future__ import annotations

import bz2
import gzip
import heapq
import io
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator
from urllib.parse import unquote
from xml.parsers import expat

from citeaudit.wikitext import WikiPage

CHUNK_SIZE = 64 * 1024


class DumpParseError(Exception):
    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} at byte {byte_offset}")
        self.byte_offset = byte_offset


def open_maybe_compressed(path: str | Path) -> BinaryIO:
    """Open a file for binary reading, decompressing gzip or bzip2 by magic bytes."""
    f = open(path, "rb")
    magic = f.read(3)
    f.seek(0)
    if magic[:2] == b"\x1f\x8b":
        return gzip.GzipFile(fileobj=f)
    if magic == b"BZh":
        return bz2.BZ2File(f)
    return f


def normalize_title(title: str) -> str:
    return title.replace("_", " ").strip()


def _local(name: str) -> str:
    return name.rsplit(":", 1)[-1] if ":" in name else name


class _PageCollector:
    """expat callbacks that assemble one <page> at a time."""

    def __init__(self) -> None:
        self.pages: list[WikiPage] = []
        self.stack: list[str] = []
        self.root_closed = False
        self._reset()

    def _reset(self) -> None:
        self.title: list[str] = []
        self.page_id: list[str] = []
        self.ns: list[str] | None = None
        self.text: list[str] = []
        self.in_page = False
        self._buf: list[str] | None = None

    def start(self, name: str, attrs) -> None:
        name = _local(name)
        parent = self.stack[-1] if self.stack else None
        self.stack.append(name)
        if name == "page":
            self._reset()
            self.in_page = True
            return
        if not self.in_page:
            return
        if parent == "page":
            if name == "title":
                self.title = []
                self._buf = self.title
            elif name == "id":
                self._buf = self.page_id if not self.page_id else None
            elif name == "ns":
                self.ns = []
                self._buf = self.ns
        elif parent == "revision" and name == "text":
            # last revision wins
            self.text = []
            self._buf = self.text

    def end(self, name: str) -> None:
        name = _local(name)
        self.stack.pop()
        self._buf = None
        if name == "page" and self.in_page:
            self.in_page = False
            ns = "".join(self.ns).strip() if self.ns is not None else "0"
            title = "".join(self.title).strip()
            if ns == "0" and title:
                page_id = "".join(self.page_id).strip()
                self.pages.append(
                    WikiPage(title, int(page_id) if page_id.isdigit() else 0, "".join(self.text))
                )
            self._reset()
        if not self.stack:
            self.root_closed = True

    def chars(self, data: str) -> None:
        if self._buf is not None:
            self._buf.append(data)


def _new_parser(collector: _PageCollector):
    parser = expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = collector.start
    parser.EndElementHandler = collector.end
    parser.CharacterDataHandler = collector.chars
    return parser


# errors raised when a second document follows a completed one
_NEXT_DOCUMENT_ERRORS = {
    expat.errors.codes[expat.errors.XML_ERROR_JUNK_AFTER_DOC_ELEMENT],
    expat.errors.codes[expat.errors.XML_ERROR_MISPLACED_XML_PI],
}


def stream_dump(source: BinaryIO) -> Iterator[WikiPage]:
    """Yield article pages from a MediaWiki XML export, one at a time.

    Pages outside namespace 0 are skipped when the export carries ``<ns>``.
    Several export documents back to back are read in sequence. On malformed
    XML, pages already completed are yielded and :class:`DumpParseError`
    is raised with the absolute byte offset.
    """
    collector = _PageCollector()
    parser = _new_parser(collector)
    doc_start = 0  # absolute offset where the current parser's input began
    consumed = 0  # absolute offset of the current chunk
    pending = b""
    has_content = False  # current document has seen non-whitespace bytes
    while True:
        chunk = pending or source.read(CHUNK_SIZE)
        pending = b""
        final = not chunk
        has_content = has_content or bool(chunk.strip())
        try:
            parser.Parse(chunk, final)
        except expat.ExpatError as exc:
            error_at = doc_start + parser.ErrorByteIndex
            yield from collector.pages
            collector.pages.clear()
            if collector.root_closed and exc.code in _NEXT_DOCUMENT_ERRORS and not final:
                rel = error_at - consumed
                pending = chunk[rel:]
                consumed = doc_start = error_at
                has_content = False
                collector = _PageCollector()
                parser = _new_parser(collector)
                continue
            if final and (collector.root_closed or not has_content):
                return
            raise DumpParseError(expat.errors.messages[exc.code], error_at) from None
        consumed += len(chunk)
        yield from collector.pages
        collector.pages.clear()
        if final:
            return


def stream_dump_path(path: str | Path) -> Iterator[WikiPage]:
    with open_maybe_compressed(path) as f:
        yield from stream_dump(f)


@dataclass(frozen=True)
class PageviewRecord:
    project: str
    title: str
    count: int


@dataclass
class PageviewStats:
    parsed: int = 0
    filtered: int = 0
    malformed: int = 0


def parse_pageview_line(
    line: str, project: str | None = None, stats: PageviewStats | None = None
) -> PageviewRecord | None:
    """Parse ``project title count bytes``; None for skipped lines."""
    parts = line.split()
    record = None
    if len(parts) == 4 and parts[2].isdigit():
        title = unquote(parts[1], errors="replace")
        if title:
            record = PageviewRecord(parts[0], title, int(parts[2]))
    if stats is not None:
        if record is None:
            stats.malformed += 1
        elif project is not None and record.project != project:
            stats.filtered += 1
        else:
            stats.parsed += 1
    if record is None or (project is not None and record.project != project):
        return None
    return record


def count_pageviews(
    path: str | Path, project: str, stats: PageviewStats | None = None
) -> Counter:
    totals: Counter = Counter()
    with open_maybe_compressed(path) as raw:
        for line in io.TextIOWrapper(raw, encoding="utf-8", errors="replace"):
            rec = parse_pageview_line(line, project, stats)
            if rec is not None:
                totals[normalize_title(rec.title)] += rec.count
    return totals


def aggregate_and_select(
    files: Iterable[str | Path],
    project: str,
    eligible_titles: Iterable[str],
    n: int,
    workers: int = 1,
    stats: PageviewStats | None = None,
) -> list[tuple[str, int]]:
    """Top ``n`` eligible titles by views summed over all files.

    Ties are broken by title. Titles on both sides are compared after
    turning underscores into spaces.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    files = list(files)
    eligible = {normalize_title(t) for t in eligible_titles}
    per_file_stats = [PageviewStats() for _ in files]
    if workers > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counters = list(pool.map(count_pageviews, files, [project] * len(files), per_file_stats))
    else:
        counters = [count_pageviews(f, project, s) for f, s in zip(files, per_file_stats)]
    totals: Counter = Counter()
    for c in counters:
        totals.update(c)
    if stats is not None:
        for s in per_file_stats:
            stats.parsed += s.parsed
            stats.filtered += s.filtered
            stats.malformed += s.malformed
    candidates = ((t, c) for t, c in totals.items() if t in eligible)
    return heapq.nsmallest(n, candidates, key=lambda tc: (-tc[1], tc[0]))
