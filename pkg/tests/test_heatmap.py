import pytest

from carriertag.heatmap import HeatmapFormat, _bucket, heatmap_document, heatmap_export
from helpers import make_sequence


def _seq(surfaces=("Das", "freut", "mich")):
    return make_sequence(list(surfaces), [(0,)] * len(surfaces), narrative_id="n1", sentence_id=2)


def test_bucket_snaps_to_quarters():
    assert _bucket(0.75) == 0.75
    assert _bucket(0.1) == 0.0
    assert _bucket(0.13) == 0.25
    assert _bucket(0.99) == 1.0
    assert _bucket(-0.2) == 0.0
    assert _bucket(1.7) == 1.0


def test_ansi_zero_probability_token_is_plain():
    out = heatmap_export(_seq(), [0.0, 0.9, 0.0], [0.0, 0.75, 0.0], HeatmapFormat.ANSI)
    model_row = out.splitlines()[1]
    cells = model_row[len("model: ") :].split(" ")
    # plain tokens carry no escape codes; the shaded one does
    assert "\x1b" not in cells[0]
    assert cells[0] == "Das"
    assert "\x1b[" in cells[1] and cells[1].endswith("\x1b[0m")
    assert "freut" in cells[1]


def test_ansi_fragment_structure():
    out = heatmap_export(_seq(), [0.0, 0.9, 0.0], [0.0, 0.75, 0.0], HeatmapFormat.ANSI)
    lines = out.splitlines()
    assert lines[0] == "== n1 / sentence 2"
    assert lines[1].startswith("model: ")
    assert lines[2].startswith("ref:   ")
    assert out.endswith("\n")


def test_narrative_level_title_has_no_sentence():
    seq = make_sequence(["a"], [(0,)], narrative_id="n7", sentence_id=0)
    seq = type(seq)(seq.narrative_id, seq.narrator_id, None, seq.tokens)
    out = heatmap_export(seq, [0.4], [0.0], HeatmapFormat.ANSI)
    assert out.splitlines()[0] == "== n7"


def test_high_probability_switches_foreground():
    dim = heatmap_export(_seq(["x"]), [0.3], [0.0], HeatmapFormat.ANSI)
    hot = heatmap_export(_seq(["x"]), [0.9], [0.0], HeatmapFormat.ANSI)
    assert "38;2;255;255;255" not in dim
    assert "38;2;255;255;255" in hot


def test_export_is_deterministic():
    args = (_seq(), [0.1, 0.6, 0.3], [0.25, 0.5, 0.0])
    assert heatmap_export(*args, HeatmapFormat.ANSI) == heatmap_export(*args, HeatmapFormat.ANSI)
    assert heatmap_export(*args, HeatmapFormat.HTML) == heatmap_export(*args, HeatmapFormat.HTML)


def test_misaligned_lengths_raise():
    with pytest.raises(ValueError, match="align"):
        heatmap_export(_seq(), [0.1, 0.2], [0.0, 0.0, 0.0], HeatmapFormat.ANSI)
    with pytest.raises(ValueError, match="align"):
        heatmap_export(_seq(), [0.1, 0.2, 0.3], [0.0], HeatmapFormat.HTML)


def test_html_escapes_markup_in_tokens():
    seq = make_sequence(["<b>", "ok"], [(0,), (0,)])
    out = heatmap_export(seq, [0.8, 0.0], [0.0, 0.0], HeatmapFormat.HTML)
    assert ">&lt;b&gt;</span>" in out
    assert "><b></span>" not in out


def test_html_cell_styles():
    out = heatmap_export(_seq(["x", "y"]), [0.8, 0.0], [0.0, 0.0], HeatmapFormat.HTML)
    assert 'background:rgba(220,20,20,0.800)' in out
    assert "<span>y</span>" in out


def test_html_document_wrapper():
    fragment = heatmap_export(_seq(), [0.1, 0.6, 0.3], [0.0, 0.75, 0.0], HeatmapFormat.HTML)
    doc = heatmap_document([fragment, fragment], HeatmapFormat.HTML)
    assert doc.startswith("<!DOCTYPE html>")
    assert doc.count('<div class="seq">') == 2
    assert doc.endswith("</body></html>\n")


def test_ansi_document_joins_fragments():
    frag = heatmap_export(_seq(), [0.0, 0.6, 0.0], [0.0, 0.75, 0.0], HeatmapFormat.ANSI)
    doc = heatmap_document([frag, frag], HeatmapFormat.ANSI)
    assert doc == frag + "\n" + frag
