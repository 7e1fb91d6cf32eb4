"""Carrier spans: threshold rule, run extraction, and the reference rule.

A carrier span is a maximal contiguous run of I-labeled tokens.  Reference
spans come from OR-ing the annotators per token (a token counts as I when at
least one annotator marked it).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .corpus import Narrative, Sequence


@dataclass(frozen=True)
class CarrierSpan:
    narrative_id: str
    sentence_id: int
    start_index: int
    end_index: int
    tokens: tuple[str, ...]
    lemmas: tuple[str, ...]

    def __len__(self) -> int:
        return self.end_index - self.start_index + 1


def threshold_labels(p_i: list[float], theta: float = 0.25) -> list[str]:
    """Map class-I probabilities to IO labels: I where p_i >= theta.

    The comparison is inclusive so that exactly one-of-four annotator
    agreement (0.25) passes the default threshold.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"threshold {theta} outside (0, 1]")
    return ["I" if p >= theta else "O" for p in p_i]


def extract_spans(labels: list[str], sequence: Sequence) -> list[CarrierSpan]:
    """Collect maximal I-runs of ``labels`` as spans over ``sequence``.

    Span indices are the tokens' narrative-level indices; sentence_id is
    taken from the first token of the run (narrative-level sequences may
    cross sentence boundaries).
    """
    if len(labels) != len(sequence.tokens):
        raise ValueError(f"{len(labels)} labels for {len(sequence.tokens)} tokens")
    spans: list[CarrierSpan] = []
    run_start: int | None = None
    for pos, label in enumerate(labels):
        if label == "I":
            if run_start is None:
                run_start = pos
        elif run_start is not None:
            spans.append(_make_span(sequence, run_start, pos - 1))
            run_start = None
    if run_start is not None:
        spans.append(_make_span(sequence, run_start, len(labels) - 1))
    return spans


def _make_span(sequence: Sequence, start_pos: int, end_pos: int) -> CarrierSpan:
    tokens = sequence.tokens[start_pos : end_pos + 1]
    return CarrierSpan(
        narrative_id=sequence.narrative_id,
        sentence_id=tokens[0].sentence_id,
        start_index=tokens[0].index_in_narrative,
        end_index=tokens[-1].index_in_narrative,
        tokens=tuple(t.surface for t in tokens),
        lemmas=tuple(t.lemma for t in tokens),
    )


def reference_spans(narrative: Narrative) -> list[CarrierSpan]:
    """Spans of the narrative under the >=1-annotator rule."""
    tokens = list(narrative.tokens())
    sequence = Sequence(narrative.narrative_id, narrative.narrator_id, None, tokens)
    labels = sequence.any_i_labels()
    return extract_spans(labels, sequence)


def annotator_spans(narrative: Narrative, annotator: int) -> list[CarrierSpan]:
    """Spans marked by a single annotator (for inter-annotator agreement)."""
    tokens = list(narrative.tokens())
    sequence = Sequence(narrative.narrative_id, narrative.narrator_id, None, tokens)
    labels = ["I" if t.annotations[annotator] else "O" for t in tokens]
    return extract_spans(labels, sequence)


def dump_spans(spans: list[CarrierSpan], path: str | Path | None = None) -> str:
    """Debug/golden-test dump: one TSV row per span."""
    lines = [
        "\t".join(
            [s.narrative_id, str(s.sentence_id), str(s.start_index), str(s.end_index), " ".join(s.tokens)]
        )
        for s in spans
    ]
    text = "\n".join(lines) + ("\n" if lines else "")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
