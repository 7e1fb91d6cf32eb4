"""Token metrics, span-agreement metrics, and fold aggregation.

Span scoring is positive (specific) agreement: a predicted span counts when
any reference span matches it and vice versa (many-to-many, no assignment),
with precision/recall/F1 over the two directions.  The matching criteria are
parameterized (exact vs partial overlap, position considered vs agnostic,
token vs lemma, with or without stopwords); loosening any criterion can only
add matches, so scores are non-decreasing along each axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

from .spans import CarrierSpan


class MatchMode(Enum):
    EXACT = "exact"
    PARTIAL = "partial"


class PositionRule(Enum):
    CONSIDERED = "considered"
    AGNOSTIC = "agnostic"


class LexicalLevel(Enum):
    TOKEN = "token"
    LEMMA = "lemma"


@dataclass(frozen=True)
class MatchConfig:
    match_mode: MatchMode
    position: PositionRule
    lexical: LexicalLevel
    strip_stopwords: bool

    def describe(self) -> str:
        parts = [self.match_mode.value, self.position.value, self.lexical.value]
        parts.append("-stopwords" if self.strip_stopwords else "+stopwords")
        return ",".join(parts)


# The five standard criterion grids, loosest last.  "a" keeps stopwords;
# b-e strip them and progressively relax matching.
NAMED_MATCH_CONFIGS: dict[str, MatchConfig] = {
    "a": MatchConfig(MatchMode.EXACT, PositionRule.AGNOSTIC, LexicalLevel.TOKEN, strip_stopwords=False),
    "b": MatchConfig(MatchMode.EXACT, PositionRule.AGNOSTIC, LexicalLevel.TOKEN, strip_stopwords=True),
    "c": MatchConfig(MatchMode.PARTIAL, PositionRule.CONSIDERED, LexicalLevel.TOKEN, strip_stopwords=True),
    "d": MatchConfig(MatchMode.PARTIAL, PositionRule.AGNOSTIC, LexicalLevel.TOKEN, strip_stopwords=True),
    "e": MatchConfig(MatchMode.PARTIAL, PositionRule.AGNOSTIC, LexicalLevel.LEMMA, strip_stopwords=True),
}


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class TokenMetrics:
    precision_class_i: float
    recall_class_i: float
    f1_class_i: float
    f1_micro: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def token_prf(predicted: list[str], reference: list[str]) -> TokenMetrics:
    """Class-I F1 and micro-averaged F1 over pooled token labels.

    With one label per token the micro average over both classes equals
    plain accuracy, which is what is reported.
    """
    if len(predicted) != len(reference):
        raise ValueError(f"{len(predicted)} predictions for {len(reference)} references")
    tp = sum(1 for p, r in zip(predicted, reference) if p == "I" and r == "I")
    fp = sum(1 for p, r in zip(predicted, reference) if p == "I" and r == "O")
    fn = sum(1 for p, r in zip(predicted, reference) if p == "O" and r == "I")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    correct = sum(1 for p, r in zip(predicted, reference) if p == r)
    micro = correct / len(reference) if reference else 0.0
    return TokenMetrics(
        precision_class_i=precision,
        recall_class_i=recall,
        f1_class_i=_f1(precision, recall),
        f1_micro=micro,
    )


@dataclass(frozen=True)
class NormalizedSpan:
    """A span reduced to its comparable form: kept token strings + their
    original narrative-level indices."""

    terms: tuple[str, ...]
    indices: tuple[int, ...]

    def is_empty(self) -> bool:
        return not self.terms


def normalize_span(
    span: CarrierSpan,
    config: MatchConfig,
    stopwords: set[str] | None = None,
) -> NormalizedSpan:
    """Lowercase, pick surface or lemma per config, optionally drop stopwords.

    Stopword membership is always decided on the lowercased surface form, so
    the same token positions survive at token and lemma level and matches can
    only be gained, never lost, when moving from tokens to lemmas.
    """
    stopwords = stopwords or set()
    terms: list[str] = []
    indices: list[int] = []
    for offset in range(len(span.tokens)):
        surface_lc = span.tokens[offset].lower()
        if config.strip_stopwords and surface_lc in stopwords:
            continue
        term = span.lemmas[offset].lower() if config.lexical is LexicalLevel.LEMMA else surface_lc
        terms.append(term)
        indices.append(span.start_index + offset)
    return NormalizedSpan(terms=tuple(terms), indices=tuple(indices))


def span_match(a: NormalizedSpan, b: NormalizedSpan, config: MatchConfig) -> bool:
    """Do two normalized spans match under the configured criteria?

    Exact requires identical term lists, partial at least one shared term.
    When position is considered, exact additionally requires identical index
    ranges and partial overlapping ranges.
    """
    if a.is_empty() or b.is_empty():
        return False
    if config.match_mode is MatchMode.EXACT:
        if a.terms != b.terms:
            return False
        if config.position is PositionRule.CONSIDERED and (
            a.indices[0] != b.indices[0] or a.indices[-1] != b.indices[-1]
        ):
            return False
        return True
    if not set(a.terms) & set(b.terms):
        return False
    if config.position is PositionRule.CONSIDERED:
        return a.indices[0] <= b.indices[-1] and b.indices[0] <= a.indices[-1]
    return True


def _normalize_all(
    spans: list[CarrierSpan], config: MatchConfig, stopwords: set[str] | None
) -> list[NormalizedSpan]:
    normalized = (normalize_span(s, config, stopwords) for s in spans)
    # Spans reduced to nothing (all stopwords) take part in neither side.
    return [n for n in normalized if not n.is_empty()]


def carrier_prf(
    predicted: list[CarrierSpan],
    reference: list[CarrierSpan],
    config: MatchConfig,
    stopwords: set[str] | None = None,
) -> PRF:
    """Positive-agreement PRF between predicted and reference span sets.

    Precision is the fraction of predicted spans with at least one matching
    reference span, recall the converse.  Two empty sets score (1, 1, 1); an
    empty set against a non-empty one scores 0 on its side.
    """
    pred = _normalize_all(predicted, config, stopwords)
    ref = _normalize_all(reference, config, stopwords)
    if not pred and not ref:
        return PRF(1.0, 1.0, 1.0)
    matched_pred = sum(1 for p in pred if any(span_match(p, r, config) for r in ref))
    matched_ref = sum(1 for r in ref if any(span_match(p, r, config) for p in pred))
    precision = matched_pred / len(pred) if pred else 0.0
    recall = matched_ref / len(ref) if ref else 0.0
    return PRF(precision, recall, _f1(precision, recall))


def _match_counts(
    predicted: list[CarrierSpan],
    reference: list[CarrierSpan],
    config: MatchConfig,
    stopwords: set[str] | None,
) -> tuple[int, int, int, int]:
    """Matched/total counts with spans grouped by narrative, so spans from
    different narratives can never match each other."""
    groups: dict[str, tuple[list[CarrierSpan], list[CarrierSpan]]] = {}
    for span in predicted:
        groups.setdefault(span.narrative_id, ([], []))[0].append(span)
    for span in reference:
        groups.setdefault(span.narrative_id, ([], []))[1].append(span)
    matched_pred = n_pred = matched_ref = n_ref = 0
    for pred_group, ref_group in groups.values():
        pred = _normalize_all(pred_group, config, stopwords)
        ref = _normalize_all(ref_group, config, stopwords)
        matched_pred += sum(1 for p in pred if any(span_match(p, r, config) for r in ref))
        n_pred += len(pred)
        matched_ref += sum(1 for r in ref if any(span_match(p, r, config) for p in pred))
        n_ref += len(ref)
    return matched_pred, n_pred, matched_ref, n_ref


def grouped_carrier_prf(
    predicted: list[CarrierSpan],
    reference: list[CarrierSpan],
    config: MatchConfig,
    stopwords: set[str] | None = None,
) -> PRF:
    """Corpus-level positive-agreement PRF: matches are sought only inside
    each narrative, counts are pooled across narratives."""
    matched_pred, n_pred, matched_ref, n_ref = _match_counts(
        predicted, reference, config, stopwords
    )
    if n_pred == 0 and n_ref == 0:
        return PRF(1.0, 1.0, 1.0)
    precision = matched_pred / n_pred if n_pred else 0.0
    recall = matched_ref / n_ref if n_ref else 0.0
    return PRF(precision, recall, _f1(precision, recall))


def positive_agreement(
    spans_a: list[CarrierSpan],
    spans_b: list[CarrierSpan],
    config: MatchConfig,
    stopwords: set[str] | None = None,
) -> float:
    """Symmetric Dice-style agreement between two annotators' span sets
    (narrative-grouped, so corpus-wide lists are safe to pass)."""
    return grouped_carrier_prf(spans_a, spans_b, config, stopwords).f1


def pairwise_agreement(
    spans_by_annotator: list[list[CarrierSpan]],
    config: MatchConfig,
    stopwords: set[str] | None = None,
) -> float:
    """Mean positive agreement over all annotator pairs (the corpus IAA)."""
    pairs = list(combinations(range(len(spans_by_annotator)), 2))
    if not pairs:
        raise ValueError("need at least two annotators")
    return sum(
        positive_agreement(spans_by_annotator[a], spans_by_annotator[b], config, stopwords)
        for a, b in pairs
    ) / len(pairs)


def aggregate_folds(values: list[float]) -> tuple[float, float]:
    """Mean and population standard deviation across folds."""
    if not values:
        raise ValueError("no fold values")
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def format_mean_std(values: list[float], percent: bool = True) -> str:
    """Render fold values as ``mean(std)`` with one decimal, in percent."""
    mean, std = aggregate_folds(values)
    scale = 100.0 if percent else 1.0
    return f"{mean * scale:.1f}({std * scale:.1f})"


def sentiment_content_split(
    spans: list[CarrierSpan],
    lexicon: dict[str, float],
) -> tuple[list[CarrierSpan], list[CarrierSpan], float | None]:
    """Partition spans into content (polarity sum 0) and sentiment carriers.

    Polarity of a span is the sum of lexicon polarities over its lowercased
    surface tokens (absent tokens count 0).  Also returns the per-narrative
    mean fraction of content spans, or None when there are no spans.
    """
    content: list[CarrierSpan] = []
    sentiment: list[CarrierSpan] = []
    per_narrative: dict[str, list[int]] = {}
    for span in spans:
        polarity = sum(lexicon.get(tok.lower(), 0.0) for tok in span.tokens)
        is_content = polarity == 0.0
        (content if is_content else sentiment).append(span)
        per_narrative.setdefault(span.narrative_id, []).append(1 if is_content else 0)
    if not spans:
        return content, sentiment, None
    fractions = [sum(flags) / len(flags) for flags in per_narrative.values()]
    return content, sentiment, sum(fractions) / len(fractions)
