"""Command-line entry point.

Stages communicate through files in the output directory::

    extract   dump.xml            -> citations.jsonl, extract_summary.json
    validate  citations.jsonl     -> annotated.jsonl, validate_summary.json,
                                     breakdown.csv, breakdown.png
    score     annotated.jsonl     -> profiles.csv, scores_<m>.csv, ranking_<m>.csv,
                                     compare_/movers_/scatter_<base>_vs_<m>.*
    rank      scores_<m>.csv      -> ranking_<m>.csv
    compare   two ranking CSVs    -> compare_/movers_/scatter_<a>_vs_<b>.*
    topn      pageview files      -> topn.csv

Exit codes: 0 success, 2 unreadable or missing input, 3 resolver problem,
4 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from citeaudit import access, ingest, plotting, records, report
from citeaudit.identifiers import DEFAULT_OA_HOSTS, HostClass, OaHostRule
from citeaudit.pipeline import extract_pages, profiles_by_article, score_and_rank
from citeaudit.ranking import (
    RankingError,
    compare,
    rank_articles,
    render_scatter_svg,
    scatter_data,
    top_movers,
)
from citeaudit.scoring import (
    PRESET_NAMES,
    PROFILE_FIELDS,
    ScoreModel,
    ZeroDenominatorPolicy,
    get_preset,
)
from citeaudit.wikitext import (
    DEFAULT_CITATION_TEMPLATES,
    DEFAULT_JOURNAL_MARKERS,
    ExtractConfig,
)

log = logging.getLogger("citeaudit")

API_KEY_ENV = "CITEAUDIT_BOOKS_API_KEY"

EXIT_INPUT = 2
EXIT_RESOLVER = 3
EXIT_CONFIG = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    dump: str | None = None
    pageviews: list[str] = field(default_factory=list)
    resolver_fixture: str | None = None
    citations: str | None = None
    annotated: str | None = None
    titles: str | None = None
    project: str = "en"
    top_n: int = 5000
    movers_n: int = 10
    models: list = field(default_factory=lambda: list(PRESET_NAMES))
    output_dir: str = "out"
    zero_denominator_policy: str | None = None
    journal_markers: list[str] = field(default_factory=lambda: list(DEFAULT_JOURNAL_MARKERS))
    citation_templates: list[str] = field(
        default_factory=lambda: sorted(DEFAULT_CITATION_TEMPLATES)
    )
    oa_hosts: list[dict] | None = None
    live: bool = False
    live_endpoint: str = access.DEFAULT_VOLUMES_ENDPOINT
    live_rate_per_second: float = 5.0
    live_batch_size: int = 8
    record_fixture: str | None = None
    figures: bool = True

    @classmethod
    def from_file(cls, path: str) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(f"cannot read config {path}: {exc}", EXIT_INPUT) from exc
        except ValueError as exc:
            raise CliError(f"config {path} is not valid JSON: {exc}", EXIT_CONFIG) from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}", EXIT_CONFIG)
        return cls(**data)

    def policy(self) -> ZeroDenominatorPolicy | None:
        if self.zero_denominator_policy is None:
            return None
        try:
            return ZeroDenominatorPolicy(self.zero_denominator_policy)
        except ValueError:
            raise CliError(
                f"unknown zero-denominator policy {self.zero_denominator_policy!r}; "
                f"choose from {[p.value for p in ZeroDenominatorPolicy]}",
                EXIT_CONFIG,
            ) from None

    def oa_rules(self) -> tuple[OaHostRule, ...]:
        if self.oa_hosts is None:
            return DEFAULT_OA_HOSTS
        try:
            return tuple(
                OaHostRule(
                    HostClass(h["host_class"]),
                    h["host"],
                    h.get("path_prefix", ""),
                    tuple(h.get("params", ())),
                )
                for h in self.oa_hosts
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise CliError(f"bad oa_hosts entry: {exc}", EXIT_CONFIG) from exc

    def extract_config(self) -> ExtractConfig:
        return ExtractConfig(
            citation_templates=frozenset(t.lower() for t in self.citation_templates),
            journal_markers=tuple(m.lower() for m in self.journal_markers),
            oa_hosts=self.oa_rules(),
        )

    def score_models(self) -> list[ScoreModel]:
        if not self.models:
            raise CliError("no models selected", EXIT_CONFIG)
        out = []
        for entry in self.models:
            if isinstance(entry, dict):
                model = _model_from(lambda: ScoreModel.from_dict(entry), str(entry))
            elif entry in PRESET_NAMES:
                model = get_preset(entry)
            elif entry.endswith(".json"):
                if not Path(entry).is_file():
                    raise CliError(f"model file not found: {entry}", EXIT_INPUT)
                model = _model_from(lambda: ScoreModel.load(entry), entry)
            else:
                raise CliError(
                    f"unknown model preset {entry!r}; valid presets: {', '.join(PRESET_NAMES)}",
                    EXIT_CONFIG,
                )
            out.append(model)
        policy = self.policy()
        if policy is not None:
            out = [m.with_policy(policy) for m in out]
        ids = [m.model_id for m in out]
        if len(set(ids)) != len(ids):
            raise CliError(f"duplicate model ids: {ids}", EXIT_CONFIG)
        return out

    @property
    def out(self) -> Path:
        path = Path(self.output_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path


def _model_from(loader, label: str) -> ScoreModel:
    try:
        return loader()
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(f"bad model definition {label}: {exc}", EXIT_CONFIG) from exc


def _require_file(path: str | None, what: str) -> Path:
    if not path:
        raise CliError(f"no {what} given", EXIT_INPUT)
    p = Path(path)
    if not p.is_file() or not os.access(p, os.R_OK):
        raise CliError(f"cannot read {what}: {path}", EXIT_INPUT)
    return p


def _read_titles(path: str) -> set[str]:
    import csv

    p = _require_file(path, "titles file")
    with open(p, encoding="utf-8", newline="") as f:
        return {ingest.normalize_title(row["title"]) for row in csv.DictReader(f)}


# -- commands -----------------------------------------------------------------


def cmd_extract(cfg: RunConfig) -> int:
    dump = _require_file(cfg.dump, "dump")
    titles = _read_titles(cfg.titles) if cfg.titles else None
    try:
        processed, citations = extract_pages(
            ingest.stream_dump_path(dump), cfg.extract_config(), titles
        )
    except ingest.DumpParseError as exc:
        raise CliError(f"{dump}: {exc}", EXIT_INPUT) from exc
    out = cfg.out
    records.write_citations(citations, out / "citations.jsonl")
    summary = report.extraction_summary(processed, citations)
    records.write_json(summary, out / "extract_summary.json")
    print(report.format_summary(summary))
    return 0


def make_resolver(cfg: RunConfig) -> access.Resolver | None:
    if cfg.live:
        inner = access.LiveResolver(
            api_key=os.environ.get(API_KEY_ENV),
            endpoint=cfg.live_endpoint,
            rate_per_second=cfg.live_rate_per_second,
            batch_size=cfg.live_batch_size,
        )
    elif cfg.resolver_fixture:
        _require_file(cfg.resolver_fixture, "resolver fixture")
        inner = access.FixtureResolver(cfg.resolver_fixture)
    else:
        return None
    return access.CachingResolver(inner)


def cmd_validate(cfg: RunConfig) -> int:
    src = _require_file(cfg.citations or str(Path(cfg.output_dir) / "citations.jsonl"), "citations file")
    try:
        citations = list(records.read_citations(src))
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from exc
    try:
        resolver = make_resolver(cfg)
    except access.ResolverConfigError as exc:
        raise CliError(str(exc), EXIT_RESOLVER) from exc
    if resolver is None and any(c.google_books_id is not None for c in citations):
        raise CliError(
            "citations contain Google Books ids but no resolver is configured "
            "(pass --resolver-fixture or --live)",
            EXIT_RESOLVER,
        )
    access.annotate(citations, resolver, cfg.oa_rules())
    out = cfg.out
    records.write_citations(citations, out / "annotated.jsonl")
    tallies = report.validation_tallies(citations)
    records.write_json(tallies, out / "validate_summary.json")
    records.write_csv(
        out / "breakdown.csv",
        ["group", "category", "count"],
        (
            [group, name, n]
            for group, counts in tallies.items()
            if isinstance(counts, dict)
            for name, n in counts.items()
        ),
    )
    if cfg.figures:
        plotting.plot_breakdown(tallies, out / "breakdown.png")
    if cfg.record_fixture and resolver is not None:
        access.write_fixture(resolver.cache.values(), cfg.record_fixture)
    print(report.format_tallies(tallies))
    return 0


def _write_comparison_outputs(cfg: RunConfig, cmp, out: Path) -> None:
    stem = f"{cmp.base_model_id}_vs_{cmp.other_model_id}"
    records.write_comparison(cmp, out / f"compare_{stem}.csv")
    if cmp.rows:
        records.write_movers(top_movers(cmp, cfg.movers_n), out / f"movers_{stem}.csv")
    records.write_scatter(cmp, out / f"scatter_{stem}.csv")
    points = scatter_data(cmp)
    (out / f"scatter_{stem}.svg").write_text(
        render_scatter_svg(points, f"{cmp.base_model_id} vs. {cmp.other_model_id}"),
        encoding="utf-8",
    )
    if cfg.figures:
        plotting.plot_rank_scatter(
            points, cmp.base_model_id, cmp.other_model_id, out / f"scatter_{stem}.png"
        )


def cmd_score(cfg: RunConfig) -> int:
    models = cfg.score_models()
    src = _require_file(cfg.annotated or str(Path(cfg.output_dir) / "annotated.jsonl"), "annotated citations file")
    citations = list(records.read_citations(src))
    if cfg.titles:
        keep = _read_titles(cfg.titles)
        citations = [c for c in citations if c.article_title in keep]
    try:
        profiles = profiles_by_article(citations)
    except access.ContractViolation as exc:
        raise CliError(f"{src}: {exc}", EXIT_INPUT) from exc
    run = score_and_rank(profiles, models, cfg.movers_n)

    out = cfg.out
    records.write_csv(
        out / "profiles.csv",
        list(PROFILE_FIELDS),
        ([getattr(p, f) for f in PROFILE_FIELDS] for p in run.profiles),
    )
    for res in run.results:
        mid = res.model.model_id
        records.write_json(res.model.to_dict(), out / f"model_{mid}.json")
        records.write_scores(res.scores, out / f"scores_{mid}.csv")
        records.write_ranking(res.ranking, out / f"ranking_{mid}.csv")
        _write_comparison_outputs(cfg, res.comparison, out)
    print(f"scored {len(profiles)} articles under {len(models)} model(s)")
    for res in run.results[1:]:
        if res.movers:
            g, l = res.movers.top_gainers[0], res.movers.top_losers[0]
            print(
                f"{run.baseline.model.model_id} -> {res.model.model_id}: "
                f"largest gain {g.title} ({g.rank_base}->{g.rank_other}, {g.delta:+d}); "
                f"largest drop {l.title} ({l.rank_base}->{l.rank_other}, {l.delta:+d})"
            )
    return 0


def cmd_rank(cfg: RunConfig, scores_path: str) -> int:
    src = _require_file(scores_path, "scores file")
    try:
        scores = records.read_scores(src)
        ranking = rank_articles(scores)
    except (ValueError, KeyError) as exc:
        raise CliError(f"{src}: {exc}", EXIT_INPUT) from exc
    model_id = ranking.model_id or src.stem.removeprefix("scores_")
    records.write_ranking(ranking, cfg.out / f"ranking_{model_id}.csv")
    print(f"ranked {len(ranking.entries)} articles for {model_id}")
    return 0


def cmd_compare(cfg: RunConfig, base_path: str, other_path: str) -> int:
    base = records.read_ranking(_require_file(base_path, "base ranking"))
    other = records.read_ranking(_require_file(other_path, "other ranking"))
    try:
        cmp = compare(base, other)
    except RankingError as exc:
        raise CliError(str(exc), EXIT_INPUT) from exc
    _write_comparison_outputs(cfg, cmp, cfg.out)
    print(f"compared {len(cmp.rows)} articles: {base.model_id} vs. {other.model_id}")
    return 0


def cmd_topn(cfg: RunConfig) -> int:
    files = [_require_file(p, "pageview file") for p in cfg.pageviews]
    if not files:
        raise CliError("no pageview files given", EXIT_INPUT)
    if cfg.citations:
        src = _require_file(cfg.citations, "citations file")
        eligible = {c.article_title for c in records.read_citations(src)}
    elif cfg.dump:
        dump = _require_file(cfg.dump, "dump")
        _, citations = extract_pages(ingest.stream_dump_path(dump), cfg.extract_config())
        eligible = {c.article_title for c in citations}
    else:
        raise CliError("topn needs --citations or --dump to decide eligibility", EXIT_INPUT)
    stats = ingest.PageviewStats()
    top = ingest.aggregate_and_select(files, cfg.project, eligible, cfg.top_n, stats=stats)
    records.write_csv(cfg.out / "topn.csv", ["title", "total_count"], top)
    print(
        f"selected {len(top)} of {len(eligible)} eligible titles "
        f"({stats.parsed} records, {stats.filtered} other-project, {stats.malformed} malformed)"
    )
    return 0


# -- argument parsing ---------------------------------------------------------


def _global_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--project", help="pageview project code, e.g. 'en'")
    p.add_argument("--models", help="comma-separated preset names or model JSON paths")
    p.add_argument(
        "--zero-denominator-policy",
        dest="zero_denominator_policy",
        help="zero, one or renormalize",
    )
    p.add_argument("--resolver-fixture", dest="resolver_fixture")
    p.add_argument("--live", action="store_true", help="query the Google Books API")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = argparse.ArgumentParser(
        prog="citeaudit",
        description="Audit citation verifiability in wiki markup dumps.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("extract", parents=[common], help="extract citations from a dump")
    s.add_argument("--dump", default=argparse.SUPPRESS)
    s.add_argument("--titles", default=argparse.SUPPRESS, help="CSV with a 'title' column")

    s = sub.add_parser("validate", parents=[common], help="validate identifiers, resolve access")
    s.add_argument("--citations", default=argparse.SUPPRESS)
    s.add_argument("--record-fixture", dest="record_fixture", default=argparse.SUPPRESS)

    s = sub.add_parser("score", parents=[common], help="score, rank and compare articles")
    s.add_argument("--annotated", default=argparse.SUPPRESS)
    s.add_argument("--titles", default=argparse.SUPPRESS)
    s.add_argument("--movers", dest="movers_n", type=int, default=argparse.SUPPRESS)

    s = sub.add_parser("rank", parents=[common], help="rank one scores CSV")
    s.add_argument("scores")

    s = sub.add_parser("compare", parents=[common], help="compare two ranking CSVs")
    s.add_argument("base")
    s.add_argument("other")
    s.add_argument("--movers", dest="movers_n", type=int, default=argparse.SUPPRESS)

    s = sub.add_parser("topn", parents=[common], help="select the most viewed eligible articles")
    s.add_argument("--pageviews", nargs="+", default=argparse.SUPPRESS)
    s.add_argument("--dump", default=argparse.SUPPRESS)
    s.add_argument("--citations", default=argparse.SUPPRESS)
    s.add_argument("--top-n", dest="top_n", type=int, default=argparse.SUPPRESS)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    opts = vars(args)
    cfg = RunConfig.from_file(opts["config"]) if "config" in opts else RunConfig()
    for f in fields(RunConfig):
        if f.name in opts:
            setattr(cfg, f.name, opts[f.name])
    if "models" in opts:
        cfg.models = [m.strip() for m in opts["models"].split(",") if m.strip()]
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config_from_args(args)
        cfg.policy()
        if args.command == "extract":
            return cmd_extract(cfg)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "score":
            return cmd_score(cfg)
        if args.command == "rank":
            return cmd_rank(cfg, args.scores)
        if args.command == "compare":
            return cmd_compare(cfg, args.base, args.other)
        return cmd_topn(cfg)
    except CliError as exc:
        print(f"citeaudit: {exc}", file=sys.stderr)
        return exc.code
    except access.ResolverConfigError as exc:
        print(f"citeaudit: {exc}", file=sys.stderr)
        return EXIT_RESOLVER
    except OSError as exc:
        print(f"citeaudit: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
