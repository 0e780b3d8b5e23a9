import re
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given
from hypothesis import strategies as st

from citeaudit.ranking import (
    ComparisonRow,
    RankComparison,
    Ranking,
    RankingError,
    compare,
    rank_articles,
    render_scatter_svg,
    scatter_data,
    tie_key,
    top_movers,
)
from citeaudit.scoring import ArticleScore


def scores(mapping, model="m"):
    return [ArticleScore(t, model, s, None) for t, s in mapping.items()]


class TestRankArticles:
    def test_ties_ordered_by_title(self):
        r = rank_articles(scores({"A": 3, "C": 2, "B": 2}))
        assert [(e.title, e.rank, e.tie_group) for e in r.entries] == [
            ("A", 1, 1), ("B", 2, 2), ("C", 3, 2)
        ]
        assert r.tie_groups() == [["A"], ["B", "C"]]

    def test_single(self):
        (entry,) = rank_articles(scores({"Only": 0.0})).entries
        assert (entry.rank, entry.tie_group) == (1, 1)

    def test_empty_keeps_model_id(self):
        assert rank_articles([], model_id="model2") == Ranking("model2", ())

    def test_float_noise_is_one_tie(self):
        a = 0.1 + 0.2
        r = rank_articles(scores({"X": a, "Y": 0.3}))
        assert len(r.tie_groups()) == 1

    def test_mixed_models_rejected(self):
        with pytest.raises(RankingError):
            rank_articles(scores({"A": 1}, "m1") + scores({"B": 1}, "m2"))

    def test_duplicate_titles_rejected(self):
        with pytest.raises(RankingError, match="A"):
            rank_articles(scores({"A": 1}) + scores({"A": 2}))

    @given(st.dictionaries(st.text(min_size=1, max_size=5), st.sampled_from([0, 0.5, 1, 2.25, 4.5]), max_size=30))
    def test_matches_brute_force(self, mapping):
        r = rank_articles(scores(mapping))
        expected = sorted(mapping, key=lambda t: (-mapping[t], t))
        assert [e.title for e in r.entries] == expected
        assert [e.rank for e in r.entries] == list(range(1, len(mapping) + 1))
        for group in r.tie_groups():
            assert len({tie_key(mapping[t]) for t in group}) == 1


class TestCompare:
    def test_self_comparison_is_zero(self):
        r = rank_articles(scores({"A": 3, "B": 2, "C": 1}))
        assert all(row.delta == 0 for row in compare(r, r).rows)

    @pytest.mark.parametrize("base, other, delta", [(3931, 1637, 2294), (741, 4046, -3305)])
    def test_delta_sign(self, base, other, delta):
        assert ComparisonRow("X", base, other).delta == delta

    def test_reordering(self):
        base = rank_articles(scores({"A": 3, "B": 2, "C": 1}, "m1"))
        other = rank_articles(scores({"A": 1, "B": 2, "C": 3}, "m2"))
        cmp = compare(base, other)
        assert {r.title: r.delta for r in cmp.rows} == {"A": -2, "B": 0, "C": 2}
        assert (cmp.base_model_id, cmp.other_model_id) == ("m1", "m2")

    def test_title_mismatch(self):
        base = rank_articles(scores({"A": 1, "B": 2}))
        other = rank_articles(scores({"A": 1, "C": 2}))
        with pytest.raises(RankingError, match=r"\['B', 'C'\]"):
            compare(base, other)

    @given(st.lists(st.integers(0, 8), min_size=1, max_size=40), st.randoms())
    def test_deltas_sum_to_zero(self, values, rnd):
        titles = [f"t{i}" for i in range(len(values))]
        shuffled = values.copy()
        rnd.shuffle(shuffled)
        base = rank_articles(scores(dict(zip(titles, values))))
        other = rank_articles(scores(dict(zip(titles, shuffled))))
        assert sum(r.delta for r in compare(base, other).rows) == 0


def comparison(pairs):
    rows = tuple(ComparisonRow(t, b, o) for t, (b, o) in pairs.items())
    return RankComparison("a", "b", rows)


class TestMovers:
    def test_top_and_bottom(self):
        cmp = comparison({"up": (5, 1), "down": (1, 5), "flat": (3, 3), "up2": (4, 2), "dn2": (2, 4)})
        rep = top_movers(cmp, 2)
        assert [r.title for r in rep.top_gainers] == ["up", "up2"]
        assert [r.title for r in rep.top_losers] == ["down", "dn2"]

    def test_n_larger_than_rows(self):
        rep = top_movers(comparison({"x": (1, 1)}), 10)
        assert len(rep.top_gainers) == len(rep.top_losers) == 1

    def test_bad_n(self):
        with pytest.raises(ValueError):
            top_movers(comparison({"x": (1, 1)}), 0)


def circle_centres(svg):
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    return [(float(c.get("cx")), float(c.get("cy"))) for c in root.iter(ns + "circle")]


class TestScatter:
    def test_identical_rankings_on_rising_diagonal(self):
        pts = scatter_data(comparison({f"t{i}": (i, i) for i in range(1, 6)}))
        assert pts == [(i, i, f"t{i}") for i in range(1, 6)]
        centres = circle_centres(render_scatter_svg(pts))
        for x, y in centres:
            assert x + y == pytest.approx(1000)
        # rank 1 at bottom-left
        assert centres[0] == (50.0, 950.0)

    def test_reversed_rankings_on_falling_diagonal(self):
        pts = scatter_data(comparison({f"t{i}": (i, 6 - i) for i in range(1, 6)}))
        for x, y in circle_centres(render_scatter_svg(pts)):
            assert x == pytest.approx(y)

    def test_svg_shape(self):
        svg = render_scatter_svg([(1, 1, "A & <B>")], title="m1 vs m2")
        assert 'viewBox="0 0 1000 1000"' in svg
        assert "A &amp; &lt;B&gt;" in svg
        assert re.search(r"<text[^>]*>m1 vs m2</text>", svg)
        ET.fromstring(svg)

    def test_empty(self):
        ET.fromstring(render_scatter_svg([]))
