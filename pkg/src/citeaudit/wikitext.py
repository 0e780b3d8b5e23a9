"""Citation extraction from MediaWiki markup.

The parser is deliberately small: it understands comments, ``<nowiki>``,
``<ref>`` tags and ``{{template|...}}`` calls, which is all that is needed
to find citations. Nothing is expanded. Offsets reported anywhere in this
module index into the page's original wikitext, which is why noise is
masked rather than deleted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from citeaudit.identifiers import (
    DEFAULT_OA_HOSTS,
    Doi,
    GoogleBooksId,
    Identifier,
    Isbn,
    OaHostRule,
    OpenAccessLink,
    ValidationStatus,
    extract_google_books_id,
    make_doi,
    match_open_access_url,
)

# Masked characters; stripped from every value handed to callers.
MASK = "\0"


class CitationKind(str, Enum):
    BOOK = "book"
    JOURNAL = "journal"
    WEB = "web"
    NEWS = "news"
    OTHER = "other"


class Anchoring(str, Enum):
    INLINE = "inline"
    FREE = "free"


DEFAULT_CITATION_TEMPLATES: frozenset[str] = frozenset(
    {
        "cite book",
        "cite journal",
        "cite web",
        "cite news",
        "citation",
        "cite conference",
        "cite thesis",
        "cite paper",
        "cite document",
        "cite study",
    }
)

DEFAULT_JOURNAL_MARKERS: tuple[str, ...] = (
    "journal",
    "study",
    "dissertation",
    "paper",
    "document",
    "thesis",
    "conference",
)


@dataclass(frozen=True)
class ExtractConfig:
    citation_templates: frozenset[str] = DEFAULT_CITATION_TEMPLATES
    journal_markers: tuple[str, ...] = DEFAULT_JOURNAL_MARKERS
    oa_hosts: tuple[OaHostRule, ...] = DEFAULT_OA_HOSTS


@dataclass(frozen=True)
class WikiPage:
    title: str
    page_id: int
    wikitext: str

    def __post_init__(self) -> None:
        if not self.title:
            raise ValueError("page title must be non-empty")
        if self.page_id < 0:
            raise ValueError("page_id must be non-negative")


@dataclass(frozen=True)
class RefSpan:
    attrs: dict[str, str]
    inner: str
    span: tuple[int, int]
    inner_start: int
    reuse: bool = False
    malformed: bool = False

    @property
    def name(self) -> str | None:
        name = self.attrs.get("name", "").strip()
        return name or None


@dataclass
class RawTemplate:
    name: str
    positional_params: list[str]
    named_params: dict[str, str]
    source_span: tuple[int, int]
    depth: int = 0
    malformed: bool = False


@dataclass
class Citation:
    """One extracted reference plus, after validation, its annotations."""

    article_title: str
    kind: CitationKind
    anchoring: Anchoring
    params: dict[str, str]
    identifiers: list[Identifier] = field(default_factory=list)
    ref_name: str | None = None
    template: str | None = None
    source_span: tuple[int, int] = (0, 0)
    flags: list[str] = field(default_factory=list)

    # filled in by citeaudit.access.annotate
    isbn_status: ValidationStatus | None = None
    doi_status: ValidationStatus | None = None
    google_books_status: ValidationStatus | None = None
    resolver_record: Any = None
    oa_status: Any = None

    def first(self, cls: type) -> Any:
        for ident in self.identifiers:
            if isinstance(ident, cls):
                return ident
        return None

    @property
    def isbn(self) -> Isbn | None:
        return self.first(Isbn)

    @property
    def doi(self) -> Doi | None:
        return self.first(Doi)

    @property
    def google_books_id(self) -> GoogleBooksId | None:
        return self.first(GoogleBooksId)

    @property
    def open_access_links(self) -> list[OpenAccessLink]:
        return [i for i in self.identifiers if isinstance(i, OpenAccessLink)]


# -- noise --------------------------------------------------------------------

_COMMENT_OPEN = "<!--"
_COMMENT_CLOSE = "-->"
_NOWIKI_RE = re.compile(r"<nowiki\s*>|<nowiki\s*/>", re.IGNORECASE)
_NOWIKI_CLOSE_RE = re.compile(r"</nowiki\s*>", re.IGNORECASE)


def strip_noise(wikitext: str) -> str:
    """Mask HTML comments and ``<nowiki>`` spans.

    Masked regions are filled with NUL characters so the result has the same
    length as the input. Unterminated comments and nowiki spans run to the
    end of the text.
    """
    chars = list(wikitext)
    pos = 0
    n = len(wikitext)
    while pos < n:
        comment = wikitext.find(_COMMENT_OPEN, pos)
        nowiki = _NOWIKI_RE.search(wikitext, pos)
        nowiki_at = nowiki.start() if nowiki else -1
        if comment < 0 and nowiki_at < 0:
            break
        if comment >= 0 and (nowiki_at < 0 or comment < nowiki_at):
            close = wikitext.find(_COMMENT_CLOSE, comment + len(_COMMENT_OPEN))
            end = n if close < 0 else close + len(_COMMENT_CLOSE)
            start = comment
        else:
            start = nowiki_at
            if nowiki.group().rstrip(">").rstrip().endswith("/"):
                end = nowiki.end()
            else:
                close_m = _NOWIKI_CLOSE_RE.search(wikitext, nowiki.end())
                end = n if close_m is None else close_m.end()
        chars[start:end] = MASK * (end - start)
        pos = end
    return "".join(chars)


def clean(value: str) -> str:
    return value.replace(MASK, "").strip()


# -- ref tags -----------------------------------------------------------------

_REF_OPEN_RE = re.compile(r"<ref(?=[\s/>])([^>]*)>", re.IGNORECASE)
_REF_CLOSE_RE = re.compile(r"</ref\s*>", re.IGNORECASE)
_ATTR_RE = re.compile(r"""([\w-]+)\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s"'>]+))""")


def parse_attrs(text: str) -> dict[str, str]:
    attrs = {}
    for m in _ATTR_RE.finditer(text):
        key = m.group(1).lower()
        value = next(g for g in m.groups()[1:] if g is not None)
        attrs.setdefault(key, clean(value))
    return attrs


def find_ref_spans(wikitext: str) -> list[RefSpan]:
    """Every ``<ref>`` occurrence in (noise-stripped) wikitext.

    Self-closing refs come back with empty inner text and ``reuse=True``.
    A ref missing its closing tag runs to the next ref opening, or the end of
    the text, and is flagged malformed.
    """
    spans: list[RefSpan] = []
    pos = 0
    while True:
        m = _REF_OPEN_RE.search(wikitext, pos)
        if m is None:
            return spans
        raw_attrs = m.group(1)
        if raw_attrs.rstrip().endswith("/"):
            spans.append(
                RefSpan(
                    parse_attrs(raw_attrs.rstrip()[:-1]),
                    "",
                    (m.start(), m.end()),
                    m.end(),
                    reuse=True,
                )
            )
            pos = m.end()
            continue
        close = _REF_CLOSE_RE.search(wikitext, m.end())
        next_open = _REF_OPEN_RE.search(wikitext, m.end())
        if close is not None and (next_open is None or close.start() < next_open.start()):
            spans.append(
                RefSpan(
                    parse_attrs(raw_attrs),
                    wikitext[m.end() : close.start()],
                    (m.start(), close.end()),
                    m.end(),
                )
            )
            pos = close.end()
        else:
            end = next_open.start() if next_open is not None else len(wikitext)
            spans.append(
                RefSpan(
                    parse_attrs(raw_attrs),
                    wikitext[m.end() : end],
                    (m.start(), end),
                    m.end(),
                    malformed=True,
                )
            )
            pos = end


# -- templates ----------------------------------------------------------------


def _normalize_name(name: str) -> str:
    name = clean(name).replace("_", " ")
    name = re.sub(r"\s+", " ", name).lower()
    if name.startswith("template:"):
        name = name[len("template:") :].strip()
    return name


def _split_top_level(body: str) -> list[str]:
    """Split on ``|`` outside nested templates and wikilinks."""
    parts = []
    depth_t = depth_l = 0
    start = i = 0
    n = len(body)
    while i < n:
        two = body[i : i + 2]
        if two == "{{":
            depth_t += 1
            i += 2
        elif two == "}}" and depth_t:
            depth_t -= 1
            i += 2
        elif two == "[[":
            depth_l += 1
            i += 2
        elif two == "]]" and depth_l:
            depth_l -= 1
            i += 2
        elif body[i] == "|" and depth_t == 0 and depth_l == 0:
            parts.append(body[start:i])
            i += 1
            start = i
        else:
            i += 1
    parts.append(body[start:])
    return parts


def _has_top_level_equals(part: str) -> int:
    depth = 0
    i = 0
    while i < len(part):
        two = part[i : i + 2]
        if two in ("{{", "[["):
            depth += 1
            i += 2
            continue
        if two in ("}}", "]]") and depth:
            depth -= 1
            i += 2
            continue
        if part[i] == "=" and depth == 0:
            return i
        i += 1
    return -1


def _build_template(body: str, span: tuple[int, int], depth: int, malformed: bool):
    pieces = _split_top_level(body)
    name = _normalize_name(pieces[0])
    if not name:
        return None
    positional: list[str] = []
    named: dict[str, str] = {}
    for piece in pieces[1:]:
        eq = _has_top_level_equals(piece)
        if eq >= 0:
            key = clean(piece[:eq]).lower()
            if key:
                named.setdefault(key, clean(piece[eq + 1 :]))
                continue
        positional.append(clean(piece))
    return RawTemplate(name, positional, named, span, depth, malformed)


def parse_templates(text: str) -> list[RawTemplate]:
    """All ``{{...}}`` templates in ``text``, outermost first by offset.

    Nested templates stay verbatim inside their parent's parameter values
    and are also returned on their own with ``depth > 0``. An opening ``{{``
    that is never closed yields a template running to the end of the text,
    flagged malformed; complete templates inside it keep their own depth
    as if the broken opener were absent.
    """
    stack: list[int] = []
    closed: list[tuple[int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        two = text[i : i + 2]
        if two == "{{":
            stack.append(i)
            i += 2
        elif two == "}}" and stack:
            start = stack.pop()
            closed.append((start, i + 2))
            i += 2
        else:
            i += 1

    closed.sort(key=lambda s: (s[0], -s[1]))
    results: list[RawTemplate] = []
    open_ends: list[int] = []
    for start, end in closed:
        while open_ends and open_ends[-1] <= start:
            open_ends.pop()
        tpl = _build_template(text[start + 2 : end - 2], (start, end), len(open_ends), False)
        open_ends.append(end)
        if tpl is not None:
            results.append(tpl)
    for start in stack:
        depth = sum(1 for s, e in closed if s < start < e)
        tpl = _build_template(text[start + 2 :], (start, n), depth, True)
        if tpl is not None:
            results.append(tpl)
    results.sort(key=lambda t: (t.source_span[0], -t.source_span[1]))
    return results


def serialize_template(tpl: RawTemplate) -> str:
    parts = [tpl.name, *tpl.positional_params]
    parts += [f"{k}={v}" for k, v in tpl.named_params.items()]
    return "{{" + "|".join(parts) + "}}"


# -- classification and extraction -------------------------------------------


def classify_citation(
    template_name: str,
    params: dict[str, str],
    ref_context: str | None = None,
    journal_markers: tuple[str, ...] = DEFAULT_JOURNAL_MARKERS,
) -> CitationKind:
    ref_type = params.get("type", "").strip().lower()
    if template_name == "cite book" or ref_type == "book":
        return CitationKind.BOOK
    if any(m in template_name or m in ref_type for m in journal_markers):
        return CitationKind.JOURNAL
    if template_name == "cite web":
        return CitationKind.WEB
    if template_name == "cite news":
        return CitationKind.NEWS
    return CitationKind.OTHER


_ISBN_KEYS = ("isbn", "isbn13", "isbn-13", "isbn10", "isbn-10")
_MAGIC_ISBN_RE = re.compile(
    r"\bISBN(?:-1[03])?:?\s+((?:97[89][\s-]?)?(?:\d[\s-]?){9}[\dXx])\b"
)
_URL_RE = re.compile(r"https?://[^\s\[\]<>\"|{}]+", re.IGNORECASE)
_BARE_DOI_RE = re.compile(r"\b(?:doi:\s*|doi\.org/)(10\.\d{4,}(?:\.\d+)*/[^\s\]|<}]+)", re.IGNORECASE)


def _is_url_key(key: str) -> bool:
    return key.endswith("url") and not key.startswith("archive")


def _identifiers_from_params(params: dict[str, str], config: ExtractConfig):
    """Identifiers in parameter order; first of each family wins."""
    isbn = doi = gbid = None
    oa: list[OpenAccessLink] = []
    extras: list[str] = []
    for key, value in params.items():
        if not value:
            continue
        if key in _ISBN_KEYS or (key == "id" and _MAGIC_ISBN_RE.search(value)):
            raw = value
            if key == "id":
                raw = _MAGIC_ISBN_RE.search(value).group(1)
            if isbn is None:
                isbn = Isbn.from_raw(raw)
            else:
                extras.append(f"extra_isbn:{key}")
        if key == "doi":
            if doi is None:
                doi = make_doi(value)
            else:
                extras.append("extra_doi")
        if _is_url_key(key):
            found = extract_google_books_id(value)
            if found is not None:
                if gbid is None:
                    gbid = found
                elif found != gbid:
                    extras.append(f"extra_google_books:{key}")
            link = match_open_access_url(value, config.oa_hosts)
            if link is not None:
                oa.append(link)
            if doi is None and re.match(r"https?://(dx\.)?doi\.org/", value, re.I):
                doi = make_doi(value)
        for rule in config.oa_hosts:
            if key in rule.params:
                oa.append(OpenAccessLink(rule.host_class, f"{key}={value}"))
                break
    idents: list[Identifier] = [i for i in (isbn, doi, gbid) if i is not None]
    seen = set()
    for link in oa:
        if link not in seen:
            seen.add(link)
            idents.append(link)
    return idents, extras


def _payload_templates(templates: list[RawTemplate], config: ExtractConfig):
    """Recognized citation templates not nested inside another one."""
    found: list[RawTemplate] = []
    for tpl in templates:
        if tpl.name not in config.citation_templates:
            continue
        if any(
            p.source_span[0] <= tpl.source_span[0] and tpl.source_span[1] <= p.source_span[1]
            for p in found
        ):
            continue
        found.append(tpl)
    return found


def _citation_from_template(
    tpl: RawTemplate,
    title: str,
    anchoring: Anchoring,
    ref: RefSpan | None,
    config: ExtractConfig,
) -> Citation:
    params = dict(tpl.named_params)
    for idx, value in enumerate(tpl.positional_params, start=1):
        params.setdefault(str(idx), value)
    idents, extras = _identifiers_from_params(params, config)
    kind = classify_citation(
        tpl.name, params, ref.inner if ref else None, config.journal_markers
    )
    flags = list(extras)
    if tpl.malformed:
        flags.append("malformed_template")
    if ref is not None and ref.malformed:
        flags.append("malformed_ref")
    return Citation(
        article_title=title,
        kind=kind,
        anchoring=anchoring,
        params=params,
        identifiers=idents,
        ref_name=ref.name if ref else None,
        template=tpl.name,
        source_span=tpl.source_span,
        flags=flags,
    )


def _bare_citation(ref: RefSpan, title: str, config: ExtractConfig) -> Citation | None:
    inner = ref.inner.replace(MASK, "")
    idents: list[Identifier] = []
    kind = CitationKind.OTHER
    m = _MAGIC_ISBN_RE.search(inner)
    if m:
        idents.append(Isbn.from_raw(m.group(1)))
        kind = CitationKind.BOOK
    m = _BARE_DOI_RE.search(inner)
    if m:
        idents.append(make_doi(m.group(1)))
    for url in _URL_RE.findall(inner):
        found = extract_google_books_id(url)
        if found is not None and not any(isinstance(i, GoogleBooksId) for i in idents):
            idents.append(found)
        link = match_open_access_url(url, config.oa_hosts)
        if link is not None and link not in idents:
            idents.append(link)
    if not idents:
        return None
    flags = ["bare"]
    if ref.malformed:
        flags.append("malformed_ref")
    return Citation(
        article_title=title,
        kind=kind,
        anchoring=Anchoring.INLINE,
        params={},
        identifiers=idents,
        ref_name=ref.name,
        template=None,
        source_span=ref.span,
        flags=flags,
    )


def _shift(templates: list[RawTemplate], offset: int) -> list[RawTemplate]:
    for tpl in templates:
        start, end = tpl.source_span
        tpl.source_span = (start + offset, end + offset)
    return templates


def extract_citations(page: WikiPage, config: ExtractConfig | None = None) -> list[Citation]:
    """Inline citations (one per ref definition) and free citations, in
    document order.

    A named ref is counted once, at its first definition; ``<ref name=x/>``
    reuses never add citations. Inside a ref the first recognized citation
    template is the payload; failing that, a bare ``ISBN`` magic word, DOI,
    Google Books URL or open-access URL is.
    """
    config = config or ExtractConfig()
    text = strip_noise(page.wikitext)
    refs = find_ref_spans(text)

    citations: list[Citation] = []
    defined_names: set[str] = set()
    masked = list(text)
    for ref in refs:
        start, end = ref.span
        masked[start:end] = MASK * (end - start)
        if ref.reuse:
            continue
        if ref.name is not None:
            if ref.name in defined_names:
                continue
            defined_names.add(ref.name)
        templates = _shift(parse_templates(ref.inner), ref.inner_start)
        payload = _payload_templates(templates, config)
        if payload:
            cit = _citation_from_template(payload[0], page.title, Anchoring.INLINE, ref, config)
            if len(payload) > 1:
                cit.flags.append(f"bundled:{len(payload)}")
            citations.append(cit)
        else:
            cit = _bare_citation(ref, page.title, config)
            if cit is not None:
                citations.append(cit)

    free_text = "".join(masked)
    for tpl in _payload_templates(parse_templates(free_text), config):
        citations.append(_citation_from_template(tpl, page.title, Anchoring.FREE, None, config))
    citations.sort(key=lambda c: c.source_span)
    return citations
