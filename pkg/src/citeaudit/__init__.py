"""Citation verifiability auditing for wiki markup corpora."""

from citeaudit.access import (
    CachingResolver,
    FixtureResolver,
    LiveResolver,
    OaStatus,
    ResolverRecord,
    Viewability,
    annotate,
    classify_open_access,
    resolve_google_books,
)
from citeaudit.identifiers import (
    NotAnIsbn,
    ValidationStatus,
    checksum_isbn10,
    checksum_isbn13,
    extract_google_books_id,
    normalize_isbn,
    validate_doi_syntax,
    validate_isbn,
)
from citeaudit.ranking import compare, rank_articles, scatter_data, top_movers
from citeaudit.scoring import (
    ArticleProfile,
    ScoreModel,
    ZeroDenominatorPolicy,
    build_profile,
    compute_proportions,
    preset_models,
    score,
)
from citeaudit.wikitext import (
    Citation,
    CitationKind,
    WikiPage,
    classify_citation,
    extract_citations,
    find_ref_spans,
    parse_templates,
    strip_noise,
)

__version__ = "0.1.0"
