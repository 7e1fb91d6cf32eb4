import numpy as np
import pytest

from carriertag.metrics import (
    LexicalLevel,
    MatchConfig,
    MatchMode,
    NAMED_MATCH_CONFIGS,
    PositionRule,
    aggregate_folds,
    carrier_prf,
    format_mean_std,
    grouped_carrier_prf,
    normalize_span,
    pairwise_agreement,
    positive_agreement,
    sentiment_content_split,
    token_prf,
)
from carriertag.spans import CarrierSpan
from helpers import SPAN_STOPWORDS, random_spans


def span(tokens, start=0, narrative_id="n1", lemmas=None):
    tokens = tuple(tokens)
    return CarrierSpan(
        narrative_id=narrative_id,
        sentence_id=0,
        start_index=start,
        end_index=start + len(tokens) - 1,
        tokens=tokens,
        lemmas=tuple(lemmas) if lemmas is not None else tuple(t.lower() for t in tokens),
    )


EXACT_CONSIDERED = MatchConfig(
    MatchMode.EXACT, PositionRule.CONSIDERED, LexicalLevel.TOKEN, strip_stopwords=True
)


class TestTokenPrf:
    def test_perfect_prediction(self):
        m = token_prf(["I", "O", "I"], ["I", "O", "I"])
        assert (m.precision_class_i, m.recall_class_i, m.f1_class_i, m.f1_micro) == (
            1.0,
            1.0,
            1.0,
            1.0,
        )

    def test_half_right(self):
        m = token_prf(["I", "I", "O", "O"], ["I", "O", "I", "O"])
        assert m.precision_class_i == 0.5
        assert m.recall_class_i == 0.5
        assert m.f1_class_i == 0.5
        assert m.f1_micro == 0.5

    def test_no_positive_predictions(self):
        m = token_prf(["O", "O"], ["I", "O"])
        assert m.precision_class_i == 0.0
        assert m.recall_class_i == 0.0
        assert m.f1_class_i == 0.0
        assert m.f1_micro == 0.5

    def test_no_positives_anywhere(self):
        m = token_prf(["O", "O"], ["O", "O"])
        assert m.f1_class_i == 0.0
        assert m.f1_micro == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            token_prf(["I"], ["I", "O"])


class TestNormalization:
    def test_stopwords_dropped_with_indices(self):
        s = span(["mit", "dem", "Drucker"], start=4)
        norm = normalize_span(s, NAMED_MATCH_CONFIGS["b"], {"mit", "dem"})
        assert norm.terms == ("drucker",)
        assert norm.indices == (6,)

    def test_stopwords_kept_under_config_a(self):
        s = span(["mit", "dem", "Drucker"], start=4)
        norm = normalize_span(s, NAMED_MATCH_CONFIGS["a"], {"mit", "dem"})
        assert norm.terms == ("mit", "dem", "drucker")

    def test_lemma_level_uses_lemmas(self):
        s = span(["Häuser"], lemmas=["haus"])
        assert normalize_span(s, NAMED_MATCH_CONFIGS["e"], set()).terms == ("haus",)
        assert normalize_span(s, NAMED_MATCH_CONFIGS["d"], set()).terms == ("häuser",)

    def test_stopword_membership_is_surface_based(self):
        # surface is not a stopword, lemma is: the token must survive at both
        # lexical levels so token -> lemma can only add matches
        s = span(["Derby"], lemmas=["der"])
        stop = {"der"}
        assert normalize_span(s, NAMED_MATCH_CONFIGS["b"], stop).terms == ("derby",)
        assert normalize_span(s, NAMED_MATCH_CONFIGS["e"], stop).terms == ("der",)

    def test_describe(self):
        assert NAMED_MATCH_CONFIGS["a"].describe() == "exact,agnostic,token,+stopwords"
        assert NAMED_MATCH_CONFIGS["e"].describe() == "partial,agnostic,lemma,-stopwords"


class TestCarrierPrf:
    def test_identical_sets(self):
        spans = [span(["freut"], start=1), span(["Familie"], start=8)]
        for config in NAMED_MATCH_CONFIGS.values():
            prf = carrier_prf(spans, list(spans), config, set())
            assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)

    def test_both_empty(self):
        prf = carrier_prf([], [], NAMED_MATCH_CONFIGS["b"], set())
        assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)

    def test_one_side_empty(self):
        prf = carrier_prf([span(["haus"])], [], NAMED_MATCH_CONFIGS["b"], set())
        assert (prf.precision, prf.recall, prf.f1) == (0.0, 0.0, 0.0)

    def test_stopword_only_span_leaves_both_sides_empty(self):
        prf = carrier_prf([span(["mit", "dem"])], [], NAMED_MATCH_CONFIGS["b"], {"mit", "dem"})
        assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)

    def test_position_considered_vs_agnostic(self):
        pred = [span(["printer"], start=5)]
        ref = [span(["printer"], start=40)]
        strict = carrier_prf(pred, ref, EXACT_CONSIDERED, set())
        assert (strict.precision, strict.recall, strict.f1) == (0.0, 0.0, 0.0)
        loose = carrier_prf(pred, ref, NAMED_MATCH_CONFIGS["b"], set())
        assert (loose.precision, loose.recall, loose.f1) == (1.0, 1.0, 1.0)

    def test_partial_counts(self):
        pred = [span(["printer"], start=0), span(["boss"], start=3)]
        ref = [span(["the", "printer"], start=7)]
        prf = carrier_prf(pred, ref, NAMED_MATCH_CONFIGS["d"], {"the"})
        assert prf.precision == 0.5
        assert prf.recall == 1.0
        assert prf.f1 == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_exact_needs_all_terms(self):
        pred = [span(["very", "happy"], start=0)]
        ref = [span(["happy"], start=1)]
        assert carrier_prf(pred, ref, NAMED_MATCH_CONFIGS["b"], set()).f1 == 0.0
        assert carrier_prf(pred, ref, NAMED_MATCH_CONFIGS["d"], set()).f1 == 1.0

    def test_partial_considered_needs_overlap(self):
        pred = [span(["gut", "haus"], start=0)]
        ref = [span(["haus", "gut"], start=1)]  # ranges 0-1 and 1-2 overlap
        assert carrier_prf(pred, ref, NAMED_MATCH_CONFIGS["c"], set()).f1 == 1.0
        ref_far = [span(["haus", "gut"], start=9)]
        assert carrier_prf(pred, ref_far, NAMED_MATCH_CONFIGS["c"], set()).f1 == 0.0


class TestGroupedMatching:
    def test_spans_match_only_within_their_narrative(self):
        pred = [span(["haus"], narrative_id="n1")]
        ref = [span(["haus"], narrative_id="n2")]
        config = NAMED_MATCH_CONFIGS["b"]
        assert carrier_prf(pred, ref, config, set()).f1 == 1.0  # flat matching
        assert grouped_carrier_prf(pred, ref, config, set()).f1 == 0.0

    def test_counts_pool_across_narratives(self):
        pred = [span(["haus"], narrative_id="n1"), span(["kind"], narrative_id="n2")]
        ref = [span(["haus"], narrative_id="n1"), span(["chef"], narrative_id="n2")]
        prf = grouped_carrier_prf(pred, ref, NAMED_MATCH_CONFIGS["b"], set())
        assert prf.precision == 0.5
        assert prf.recall == 0.5
        assert prf.f1 == 0.5

    def test_grouped_both_empty(self):
        prf = grouped_carrier_prf([], [], NAMED_MATCH_CONFIGS["b"], set())
        assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)


class TestAgreement:
    def test_positive_agreement_golden(self):
        a = [span(["haus"], start=0), span(["kind"], start=5)]
        b = [span(["haus"], start=10), span(["chef"], start=20), span(["arbeit"], start=30)]
        # one of two matches on one side, one of three on the other:
        # P=1/2, R=1/3, F1=0.4
        assert positive_agreement(a, b, NAMED_MATCH_CONFIGS["b"], set()) == pytest.approx(
            0.4, abs=1e-12
        )

    def test_pairwise_is_mean_over_pairs(self):
        by_annotator = [
            [span(["haus"], start=0)],
            [span(["haus"], start=9)],
            [span(["kind"], start=3)],
        ]
        config = NAMED_MATCH_CONFIGS["b"]
        expected = np.mean(
            [
                positive_agreement(by_annotator[i], by_annotator[j], config, set())
                for i, j in [(0, 1), (0, 2), (1, 2)]
            ]
        )
        assert pairwise_agreement(by_annotator, config, set()) == pytest.approx(
            float(expected), abs=1e-12
        )

    def test_pairwise_needs_two_annotators(self):
        with pytest.raises(ValueError, match="two annotators"):
            pairwise_agreement([[span(["haus"])]], NAMED_MATCH_CONFIGS["b"], set())


class TestAggregation:
    def test_single_fold(self):
        assert aggregate_folds([0.5]) == (0.5, 0.0)

    def test_two_folds(self):
        mean, std = aggregate_folds([0.4, 0.6])
        assert mean == pytest.approx(0.5, abs=1e-12)
        assert std == pytest.approx(0.1, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_folds([])

    def test_format_mean_std(self):
        assert format_mean_std([0.4, 0.6]) == "50.0(10.0)"
        assert format_mean_std([0.4, 0.6], percent=False) == "0.5(0.1)"


AXES = [
    # (tighter, looser) per axis; the remaining two axes iterate freely
    ("match_mode", MatchMode.EXACT, MatchMode.PARTIAL),
    ("position", PositionRule.CONSIDERED, PositionRule.AGNOSTIC),
    ("lexical", LexicalLevel.TOKEN, LexicalLevel.LEMMA),
]


def _configs_for_axis(axis):
    name, tight, loose = axis
    others = {
        "match_mode": list(MatchMode),
        "position": list(PositionRule),
        "lexical": list(LexicalLevel),
    }
    del others[name]
    keys = list(others)
    for first in others[keys[0]]:
        for second in others[keys[1]]:
            for strip in (False, True):
                base = {keys[0]: first, keys[1]: second, "strip_stopwords": strip}
                yield (
                    MatchConfig(**{name: tight, **base}),
                    MatchConfig(**{name: loose, **base}),
                )


@pytest.mark.parametrize("axis", AXES, ids=[a[0] for a in AXES])
def test_relaxing_a_criterion_never_lowers_f1(axis):
    rng = np.random.default_rng(20240517)
    for _ in range(100):
        pred = random_spans(rng)
        ref = random_spans(rng)
        for tight, loose in _configs_for_axis(axis):
            f_tight = grouped_carrier_prf(pred, ref, tight, SPAN_STOPWORDS).f1
            f_loose = grouped_carrier_prf(pred, ref, loose, SPAN_STOPWORDS).f1
            assert f_loose >= f_tight - 1e-12, (
                f"{tight.describe()} -> {loose.describe()} dropped f1 "
                f"{f_tight} -> {f_loose}"
            )


class TestSentimentContentSplit:
    LEXICON = {"glücklich": 0.7, "gut": 0.5, "schlecht": -0.5}

    def test_partition(self):
        sentiment_span = span(["glücklich"], narrative_id="n1")
        content_span = span(["drucker", "kind"], start=4, narrative_id="n1")
        content, sentiment, fraction = sentiment_content_split(
            [sentiment_span, content_span], self.LEXICON
        )
        assert content == [content_span]
        assert sentiment == [sentiment_span]
        assert fraction == pytest.approx(0.5)

    def test_cancelling_polarities_count_as_content(self):
        mixed = span(["gut", "schlecht"])
        content, sentiment, fraction = sentiment_content_split([mixed], self.LEXICON)
        assert content == [mixed]
        assert sentiment == []
        assert fraction == 1.0

    def test_lookup_is_lowercased(self):
        content, sentiment, _ = sentiment_content_split([span(["GUT"])], self.LEXICON)
        assert sentiment and not content

    def test_fraction_is_mean_over_narratives(self):
        spans = [
            span(["glücklich"], narrative_id="n1"),
            span(["drucker"], start=4, narrative_id="n1"),
            span(["kind"], narrative_id="n2"),
        ]
        _, _, fraction = sentiment_content_split(spans, self.LEXICON)
        assert fraction == pytest.approx((0.5 + 1.0) / 2.0)

    def test_no_spans(self):
        assert sentiment_content_split([], self.LEXICON) == ([], [], None)
