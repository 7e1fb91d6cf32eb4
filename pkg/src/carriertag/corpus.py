"""Corpus model and I/O for multi-annotator IO-labeled narratives.

A corpus is a set of narratives, each told by one narrator and split into
sentences of pre-tokenized tokens.  Every token carries one binary I/O label
per annotator (I = inside an emotion-carrier span).  The on-disk format is
UTF-8 tab-separated:

    #annotators=K
    narrative_id  narrator_id  sentence_id  token_index  surface  lemma  pos  L1 .. LK

where ``lemma`` and ``pos`` may be ``_`` (lemma then defaults to the
lowercased surface, pos to empty) and each label column is ``I`` or ``O``.
Blank lines between narratives are optional.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator


class CorpusFormatError(ValueError):
    """Raised when a corpus, stopword, or lexicon file violates its format."""


def default_is_punct(surface: str) -> bool:
    """True when the token consists solely of punctuation/symbol characters."""
    if not surface:
        return False
    return all(unicodedata.category(ch)[0] in ("P", "S") for ch in surface)


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    lemma: str
    pos: str
    is_punct: bool
    annotations: tuple[int, ...]
    index_in_narrative: int
    sentence_id: int

    def any_annotator_i(self) -> bool:
        return any(self.annotations)


@dataclass(frozen=True)
class LabelDistribution:
    """Probability of class I vs O for one token; p_i + p_o == 1 by construction."""

    p_i: float
    p_o: float


@dataclass
class Sentence:
    sentence_id: int
    tokens: list[AnnotatedToken]


@dataclass
class Narrative:
    narrative_id: str
    narrator_id: str
    sentences: list[Sentence]

    def tokens(self) -> Iterator[AnnotatedToken]:
        for sentence in self.sentences:
            yield from sentence.tokens


class SegmentationStrategy(Enum):
    """How narratives are cut into training/evaluation sequences."""

    NARRATIVE = "narrative"
    SENT_ALL = "sentall"
    SENT_CARR = "sentcarr"


@dataclass
class Sequence:
    """One model input/evaluation unit produced by :func:`segment`.

    ``sentence_id`` is None for narrative-level sequences, which may cover
    several sentences; each token still knows its own sentence.
    """

    narrative_id: str
    narrator_id: str
    sentence_id: int | None
    tokens: list[AnnotatedToken]

    def __len__(self) -> int:
        return len(self.tokens)

    def any_i_labels(self) -> list[str]:
        """Reference IO labels under the >=1-annotator rule."""
        return ["I" if t.any_annotator_i() else "O" for t in self.tokens]


@dataclass
class CorpusStats:
    frac_tokens_any_i: float
    frac_sentences_with_carrier: float
    mean_tokens_per_narrative: float
    mean_tokens_per_sentence: float
    mean_carriers_per_narrative: float
    mean_carrier_len_per_annotator: list[float]


_NUM_FIXED_COLUMNS = 7


def parse_corpus(
    path: str | Path,
    expected_annotators: int | None = None,
    is_punct: Callable[[str], bool] = default_is_punct,
) -> list[Narrative]:
    """Parse a corpus file into narratives, validating as it goes.

    Raises :class:`CorpusFormatError` (naming the offending line) on a wrong
    column count, a label outside {I, O}, an annotator count that disagrees
    with the header or ``expected_annotators``, a duplicate or non-increasing
    token index, or a narrative/sentence block that restarts after ending.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()

    n_annotators: int | None = expected_annotators
    header_seen = False
    narratives: dict[str, Narrative] = {}
    last_index: dict[str, int] = {}
    closed_sentences: dict[str, set[int]] = {}
    order: list[str] = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.startswith("#annotators="):
                try:
                    header_k = int(line.split("=", 1)[1])
                except ValueError:
                    raise CorpusFormatError(f"line {lineno}: unreadable annotator count {line!r}")
                if expected_annotators is not None and header_k != expected_annotators:
                    raise CorpusFormatError(
                        f"line {lineno}: header declares {header_k} annotators, expected {expected_annotators}"
                    )
                n_annotators = header_k
                header_seen = True
            continue

        if n_annotators is None:
            raise CorpusFormatError(f"line {lineno}: data before '#annotators=K' header")

        cols = line.split("\t")
        if len(cols) != _NUM_FIXED_COLUMNS + n_annotators:
            raise CorpusFormatError(
                f"line {lineno}: expected {_NUM_FIXED_COLUMNS + n_annotators} columns, got {len(cols)}"
            )
        narrative_id, narrator_id, sent_col, idx_col, surface, lemma, pos = cols[:_NUM_FIXED_COLUMNS]
        labels = cols[_NUM_FIXED_COLUMNS:]
        try:
            sentence_id = int(sent_col)
            token_index = int(idx_col)
        except ValueError:
            raise CorpusFormatError(f"line {lineno}: non-integer sentence_id/token_index")
        annotations = []
        for k, lab in enumerate(labels):
            if lab == "I":
                annotations.append(1)
            elif lab == "O":
                annotations.append(0)
            else:
                raise CorpusFormatError(f"line {lineno}: label {lab!r} in annotator column {k + 1} is not I or O")
        if not narrator_id:
            raise CorpusFormatError(f"line {lineno}: empty narrator_id")

        if lemma == "_" or lemma == "":
            lemma = surface.lower()
        if pos == "_":
            pos = ""

        token = AnnotatedToken(
            surface=surface,
            lemma=lemma,
            pos=pos,
            is_punct=is_punct(surface),
            annotations=tuple(annotations),
            index_in_narrative=token_index,
            sentence_id=sentence_id,
        )

        if narrative_id not in narratives:
            narratives[narrative_id] = Narrative(narrative_id, narrator_id, [])
            last_index[narrative_id] = -1
            closed_sentences[narrative_id] = set()
            order.append(narrative_id)
        narrative = narratives[narrative_id]
        if order[-1] != narrative_id:
            raise CorpusFormatError(f"line {lineno}: narrative {narrative_id!r} restarts after ending")
        if narrative.narrator_id != narrator_id:
            raise CorpusFormatError(
                f"line {lineno}: narrative {narrative_id!r} switches narrator "
                f"{narrative.narrator_id!r} -> {narrator_id!r}"
            )
        if token_index == last_index[narrative_id]:
            raise CorpusFormatError(f"line {lineno}: duplicate token index {token_index} in {narrative_id!r}")
        if token_index < last_index[narrative_id]:
            raise CorpusFormatError(f"line {lineno}: token index {token_index} not increasing in {narrative_id!r}")
        last_index[narrative_id] = token_index

        if narrative.sentences and narrative.sentences[-1].sentence_id == sentence_id:
            narrative.sentences[-1].tokens.append(token)
        else:
            if sentence_id in closed_sentences[narrative_id]:
                raise CorpusFormatError(
                    f"line {lineno}: sentence {sentence_id} of {narrative_id!r} is not contiguous"
                )
            if narrative.sentences:
                closed_sentences[narrative_id].add(narrative.sentences[-1].sentence_id)
            narrative.sentences.append(Sentence(sentence_id, [token]))

    if not header_seen and n_annotators is None and any(l.strip() for l in lines):
        raise CorpusFormatError("missing '#annotators=K' header")
    return [narratives[nid] for nid in order]


def write_corpus(narratives: list[Narrative], path: str | Path | None = None) -> str:
    """Serialize narratives to the canonical corpus format.

    Lemma and pos are written out explicitly (``_`` only for empty pos), with
    one blank line between narratives; re-writing a parsed canonical file
    reproduces it byte for byte.
    """
    if narratives:
        k = len(next(iter(narratives[0].tokens())).annotations)
    else:
        k = 0
    out: list[str] = [f"#annotators={k}"]
    for n, narrative in enumerate(narratives):
        if n > 0:
            out.append("")
        for sentence in narrative.sentences:
            for tok in sentence.tokens:
                row = [
                    narrative.narrative_id,
                    narrative.narrator_id,
                    str(sentence.sentence_id),
                    str(tok.index_in_narrative),
                    tok.surface,
                    tok.lemma,
                    tok.pos if tok.pos else "_",
                ] + ["I" if a else "O" for a in tok.annotations]
                out.append("\t".join(row))
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def preprocess(narratives: list[Narrative], strip_punct: bool = True) -> list[Narrative]:
    """Drop punctuation tokens, re-index densely, and drop emptied sentences.

    Returns new narratives; the input is left untouched.  Idempotent.
    """
    result = []
    for narrative in narratives:
        index = 0
        sentences = []
        for sentence in narrative.sentences:
            kept = []
            for tok in sentence.tokens:
                if strip_punct and tok.is_punct:
                    continue
                kept.append(replace(tok, index_in_narrative=index))
                index += 1
            if kept:
                sentences.append(Sentence(sentence.sentence_id, kept))
        result.append(Narrative(narrative.narrative_id, narrative.narrator_id, sentences))
    return result


def build_distribution(token: AnnotatedToken) -> LabelDistribution:
    """Per-token label distribution: p_i = fraction of annotators voting I."""
    k = len(token.annotations)
    if k == 0:
        raise ValueError("token has no annotations")
    p_i = sum(token.annotations) / k
    return LabelDistribution(p_i=p_i, p_o=1.0 - p_i)


def segment(narratives: list[Narrative], strategy: SegmentationStrategy) -> list[Sequence]:
    """Cut narratives into sequences according to the segmentation strategy.

    NARRATIVE yields one sequence per narrative, SENT_ALL one per sentence,
    and SENT_CARR the SENT_ALL sequences that contain at least one token some
    annotator labeled I.
    """
    sequences: list[Sequence] = []
    for narrative in narratives:
        if strategy is SegmentationStrategy.NARRATIVE:
            tokens = list(narrative.tokens())
            if tokens:
                sequences.append(Sequence(narrative.narrative_id, narrative.narrator_id, None, tokens))
            continue
        for sentence in narrative.sentences:
            if strategy is SegmentationStrategy.SENT_CARR and not any(
                t.any_annotator_i() for t in sentence.tokens
            ):
                continue
            sequences.append(
                Sequence(narrative.narrative_id, narrative.narrator_id, sentence.sentence_id, list(sentence.tokens))
            )
    return sequences


def _runs(mask: list[int]) -> list[int]:
    """Lengths of maximal runs of 1s."""
    lengths = []
    current = 0
    for v in mask:
        if v:
            current += 1
        elif current:
            lengths.append(current)
            current = 0
    if current:
        lengths.append(current)
    return lengths


def corpus_stats(narratives: list[Narrative]) -> CorpusStats:
    """Corpus statistics under the >=1-annotator rule for "any I"."""
    all_tokens = [t for n in narratives for t in n.tokens()]
    if not all_tokens:
        raise ValueError("empty corpus")
    k = len(all_tokens[0].annotations)
    n_sentences = sum(len(n.sentences) for n in narratives)

    any_i = sum(1 for t in all_tokens if t.any_annotator_i())
    carrier_sentences = sum(
        1 for n in narratives for s in n.sentences if any(t.any_annotator_i() for t in s.tokens)
    )

    run_lengths: list[list[int]] = [[] for _ in range(k)]
    runs_per_narrative: list[float] = []
    for narrative in narratives:
        tokens = list(narrative.tokens())
        per_annotator_runs = []
        for a in range(k):
            lengths = _runs([t.annotations[a] for t in tokens])
            run_lengths[a].extend(lengths)
            per_annotator_runs.append(len(lengths))
        runs_per_narrative.append(sum(per_annotator_runs) / k)

    return CorpusStats(
        frac_tokens_any_i=any_i / len(all_tokens),
        frac_sentences_with_carrier=carrier_sentences / n_sentences if n_sentences else 0.0,
        mean_tokens_per_narrative=len(all_tokens) / len(narratives),
        mean_tokens_per_sentence=len(all_tokens) / n_sentences if n_sentences else 0.0,
        mean_carriers_per_narrative=sum(runs_per_narrative) / len(narratives),
        mean_carrier_len_per_annotator=[
            sum(lengths) / len(lengths) if lengths else 0.0 for lengths in run_lengths
        ],
    )


def load_stopwords(path: str | Path) -> set[str]:
    """One lowercased token per line; blank lines ignored."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word:
            words.add(word.lower())
    return words


def load_sentiment_lexicon(path: str | Path) -> dict[str, float]:
    """Tab-separated ``token<TAB>polarity`` with polarity in [-1, 1]."""
    lexicon: dict[str, float] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusFormatError(f"lexicon line {lineno}: expected 'token<TAB>polarity'")
        token, value = parts
        try:
            polarity = float(value)
        except ValueError:
            raise CorpusFormatError(f"lexicon line {lineno}: unreadable polarity {value!r}")
        if not -1.0 <= polarity <= 1.0:
            raise CorpusFormatError(f"lexicon line {lineno}: polarity {polarity} outside [-1, 1]")
        lexicon[token.lower()] = polarity
    return lexicon
