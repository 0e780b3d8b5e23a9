import json
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from citeaudit.access import ContractViolation, FixtureResolver, annotate
from citeaudit.scoring import (
    COMPONENTS,
    PRESET_NAMES,
    ArticleProfile,
    ComponentProportions,
    ScoreModel,
    ZeroDenominatorPolicy,
    build_profile,
    compute_proportions,
    get_preset,
    preset_models,
    score,
    score_article,
)
from citeaudit.wikitext import WikiPage, extract_citations

ZERO = ZeroDenominatorPolicy.ZERO
ONE = ZeroDenominatorPolicy.ONE
RENORM = ZeroDenominatorPolicy.RENORMALIZE


def arbitration():
    return ArticleProfile(
        "Arbitration",
        books_total=2, isbns_present=2, isbns_valid=2, books_with_any_identifier=2,
        gb_links_total=2, gb_valid=2, gb_none=2,
        journals_total=14, journals_with_doi=13, journals_confirmed_oa=1,
    )


def bugatti():
    return ArticleProfile(
        "Bugatti",
        books_total=3, isbns_present=1, isbns_valid=1, books_with_any_identifier=1,
        gb_links_total=1, gb_valid=1, gb_full=1,
        journals_total=2, journals_no_identifier=2,
    )


def nero():
    return ArticleProfile(
        "Nero",
        books_total=1, isbns_present=1, isbns_valid=1, books_with_any_identifier=1,
        gb_links_total=5, gb_valid=5, gb_partial=2, gb_none=3,
        journals_total=14, journals_with_doi=13, journals_confirmed_oa=1,
    )


class TestBuildProfile:
    TEXT = (
        "<ref>{{cite book|isbn=0306406152|url=https://books.google.com/books?id=Full1}}</ref>"
        "<ref>{{cite book|isbn=0306406153}}</ref>"
        "<ref>{{cite book|title=No ids}}</ref>"
        "<ref>{{cite book|url=https://books.google.com/books?id=Gone1}}</ref>"
        "<ref>{{cite web|url=https://books.google.com/books?id=Part1}}</ref>"
        "<ref>{{cite web|url=https://books.google.com/books?id=NotInFixture}}</ref>"
        "<ref>{{cite journal|doi=10.1000/1|pmc=5}}</ref>"
        "<ref>{{cite journal|doi=10.1000/2}}</ref>"
        "<ref>{{cite journal|doi=12.1/x}}</ref>"
    )

    @pytest.fixture
    def resolver(self, tmp_path):
        path = tmp_path / "gb.jsonl"
        path.write_text(
            "\n".join(
                json.dumps(r)
                for r in [
                    {"id": "Full1", "exists": True, "viewability": "full"},
                    {"id": "Gone1", "exists": False},
                    {"id": "Part1", "exists": True, "viewability": "partial"},
                ]
            )
        )
        return FixtureResolver(path)

    def test_counts(self, resolver):
        cits = annotate(extract_citations(WikiPage("T", 1, self.TEXT)), resolver)
        prof = build_profile("T", cits)
        assert prof == ArticleProfile(
            "T",
            books_total=4, isbns_present=2, isbns_valid=1, books_with_any_identifier=1,
            gb_links_total=3, gb_valid=2, gb_full=1, gb_partial=1, gb_none=0, gb_unknown=1,
            journals_total=3, journals_with_doi=2, journals_confirmed_oa=1,
            journals_no_identifier=1,
        )

    def test_requires_annotation(self):
        cits = extract_citations(WikiPage("T", 1, self.TEXT))
        with pytest.raises(ContractViolation, match="run validation first"):
            build_profile("T", cits)

    def test_empty(self):
        assert build_profile("E", []) == ArticleProfile("E")

    def test_check_rejects_inconsistent(self):
        with pytest.raises(AssertionError):
            replace(bugatti(), isbns_valid=5).check()


class TestProportions:
    def test_bugatti(self):
        p = compute_proportions(bugatti())
        assert p.as_tuple() == (1.0, 1.0, 0.0, pytest.approx(1 / 3), 0.0, 1.0, 0.0)

    def test_zero_denominators(self):
        empty = ArticleProfile("E")
        assert compute_proportions(empty, ZERO).as_tuple() == (0.0,) * 7
        assert compute_proportions(empty, ONE).as_tuple() == (1.0,) * 7
        assert compute_proportions(empty, RENORM).as_tuple() == (None,) * 7

    def test_policy_only_touches_empty_components(self):
        a, b = compute_proportions(bugatti(), ZERO), compute_proportions(bugatti(), ONE)
        assert a == b

    def test_renormalize_excludes_component(self):
        prof = ArticleProfile("Books only", books_total=1, isbns_present=1, isbns_valid=1,
                              books_with_any_identifier=1)
        p = compute_proportions(prof, RENORM)
        assert p.journal_oa is None and p.isbn_valid == 1.0
        m1 = get_preset("model1").with_policy(RENORM)
        assert score(p, m1).score == 1.0
        assert score_article(prof, get_preset("model1").with_policy(ONE)).score == 4.5


class TestScores:
    @pytest.mark.parametrize(
        "profile, expected",
        [(arbitration(), 2.07), (bugatti(), 3.0), (nero(), 2.27)],
    )
    def test_model1_examples(self, profile, expected):
        assert score_article(profile, get_preset("model1")).score == pytest.approx(expected, abs=0.005)

    @pytest.mark.parametrize(
        "model, expected", [("model1", 3.0), ("model2", 5.0), ("model3", 4.0), ("model4", 3.33)]
    )
    def test_bugatti_all_models(self, model, expected):
        assert score_article(bugatti(), get_preset(model)).score == pytest.approx(expected, abs=0.005)

    def test_exact_arbitration(self):
        assert score_article(arbitration(), get_preset("model1")).score == pytest.approx(2 + 1 / 14)


class TestModels:
    def test_presets(self):
        assert PRESET_NAMES == ("model1", "model2", "model3", "model4")
        assert sum(get_preset("model1").weights) == 4.5
        assert [sum(m.weights) for m in preset_models()] == [4.5, 6.5, 7.0, 6.5]

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            get_preset("model9")

    @pytest.mark.parametrize("weights", [(0,) * 7, (1, 1, 1, 1, 1, 1, -1)])
    def test_invalid_weights(self, weights):
        with pytest.raises(ValueError):
            ScoreModel("bad", *weights)

    def test_dict_round_trip(self, tmp_path):
        m = get_preset("model4").with_policy(RENORM)
        path = tmp_path / "m.json"
        path.write_text(json.dumps(m.to_dict()))
        assert ScoreModel.load(path) == m

    def test_from_dict_missing_weights_default_zero(self):
        m = ScoreModel.from_dict({"model_id": "x", "weights": {"w_isbn_valid": 2}})
        assert m.weights == (2.0, 0, 0, 0, 0, 0, 0)

    def test_from_dict_rejects_unknown_name(self):
        with pytest.raises(ValueError, match="w_typo"):
            ScoreModel.from_dict({"model_id": "x", "weights": {"w_typo": 1, "w_gb_valid": 1}})


unit = st.floats(min_value=0, max_value=1)
weight = st.floats(min_value=0, max_value=10)
props_st = st.builds(ComponentProportions, *(unit for _ in COMPONENTS))
weights_st = st.tuples(*(weight for _ in COMPONENTS)).filter(lambda w: any(x > 0 for x in w))


class TestScoreProperties:
    @given(props_st, weights_st, st.integers(0, 6), unit)
    def test_monotone_in_each_component(self, props, weights, idx, bump):
        model = ScoreModel("m", *weights)
        values = list(props.as_tuple())
        higher = values.copy()
        higher[idx] = max(values[idx], bump)
        assert score(ComponentProportions(*higher), model).score >= score(props, model).score - 1e-12

    @given(props_st, weights_st)
    def test_bounds(self, props, weights):
        s = score(props, ScoreModel("m", *weights)).score
        assert -1e-12 <= s <= sum(weights) + 1e-9

    @given(props_st, weights_st, st.floats(min_value=0.1, max_value=100))
    def test_scaling(self, props, weights, k):
        model = ScoreModel("m", *weights)
        assert score(props, model.scaled(k)).score == pytest.approx(
            k * score(props, model).score, rel=1e-9, abs=1e-9
        )
