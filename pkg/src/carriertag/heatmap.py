"""Token probability heatmaps (terminal and HTML).

Each sequence renders as two aligned rows: the model row shades every token
by its continuous class-I probability, the reference row by the annotator
vote fraction, which only takes the values k/K and is snapped to quarter
buckets for display.
"""

from __future__ import annotations

from enum import Enum
from html import escape

from .corpus import Sequence


class HeatmapFormat(Enum):
    ANSI = "ansi"
    HTML = "html"


def _bucket(p: float) -> float:
    """Snap a reference probability to the nearest quarter in [0, 1]."""
    return min(max(round(p * 4), 0), 4) / 4


def _ansi_cell(token: str, p: float) -> str:
    if p <= 0.0:
        return token
    fade = 255 - round(205 * p)
    fg = "38;2;255;255;255;" if p >= 0.5 else ""
    return f"\x1b[{fg}48;2;255;{fade};{fade}m{token}\x1b[0m"


def _html_cell(token: str, p: float) -> str:
    if p <= 0.0:
        return f"<span>{escape(token)}</span>"
    color = "#fff" if p >= 0.5 else "inherit"
    return (
        f'<span style="background:rgba(220,20,20,{p:.3f});color:{color}">'
        f"{escape(token)}</span>"
    )


def heatmap_export(
    sequence: Sequence,
    predicted: list[float],
    reference: list[float],
    fmt: HeatmapFormat,
) -> str:
    """Render one sequence's model-vs-reference heatmap fragment."""
    if not len(sequence.tokens) == len(predicted) == len(reference):
        raise ValueError("sequence, predictions, and references must align")
    tokens = [t.surface for t in sequence.tokens]
    ref = [_bucket(p) for p in reference]
    title = sequence.narrative_id + (
        f" / sentence {sequence.sentence_id}" if sequence.sentence_id is not None else ""
    )
    if fmt is HeatmapFormat.ANSI:
        model_row = " ".join(_ansi_cell(t, p) for t, p in zip(tokens, predicted))
        ref_row = " ".join(_ansi_cell(t, p) for t, p in zip(tokens, ref))
        return f"== {title}\nmodel: {model_row}\nref:   {ref_row}\n"
    model_row = " ".join(_html_cell(t, p) for t, p in zip(tokens, predicted))
    ref_row = " ".join(_html_cell(t, p) for t, p in zip(tokens, ref))
    return (
        f'<div class="seq"><h3>{escape(title)}</h3>'
        f'<p class="row"><b>model</b> {model_row}</p>'
        f'<p class="row"><b>ref</b> {ref_row}</p></div>'
    )


def heatmap_document(fragments: list[str], fmt: HeatmapFormat) -> str:
    """Join per-sequence fragments into one self-contained document."""
    if fmt is HeatmapFormat.ANSI:
        return "\n".join(fragments)
    body = "\n".join(fragments)
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        "<style>body{font-family:sans-serif} .row span{padding:1px 2px;"
        "border-radius:2px}</style></head>\n"
        f"<body>\n{body}\n</body></html>\n"
    )
