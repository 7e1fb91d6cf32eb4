"""Shared builders for hand-constructed corpora and span sets."""

from __future__ import annotations

import numpy as np

from carriertag.corpus import AnnotatedToken, Narrative, Sentence, Sequence
from carriertag.spans import CarrierSpan


def make_token(
    surface: str,
    votes,
    index: int,
    sentence_id: int = 0,
    lemma: str | None = None,
    pos: str = "X",
    is_punct: bool = False,
) -> AnnotatedToken:
    return AnnotatedToken(
        surface=surface,
        lemma=lemma if lemma is not None else surface.lower(),
        pos=pos,
        is_punct=is_punct,
        annotations=tuple(votes),
        index_in_narrative=index,
        sentence_id=sentence_id,
    )


def make_sequence(
    surfaces,
    votes,
    narrative_id: str = "n1",
    narrator_id: str = "a",
    sentence_id: int = 0,
    lemmas=None,
) -> Sequence:
    lemmas = lemmas or [None] * len(surfaces)
    tokens = [
        make_token(s, v, i, sentence_id, lemma=lem)
        for i, (s, v, lem) in enumerate(zip(surfaces, votes, lemmas))
    ]
    return Sequence(narrative_id, narrator_id, sentence_id, tokens)


def make_narrative(sentences_spec, narrative_id: str = "n1", narrator_id: str = "a") -> Narrative:
    """sentences_spec: list of (surfaces, votes) pairs, one per sentence."""
    sentences = []
    index = 0
    for sentence_id, (surfaces, votes) in enumerate(sentences_spec):
        tokens = []
        for surface, vote in zip(surfaces, votes):
            tokens.append(make_token(surface, vote, index, sentence_id))
            index += 1
        sentences.append(Sentence(sentence_id, tokens))
    return Narrative(narrative_id, narrator_id, sentences)


# Vocabulary for random span sets.  Lemmas are a pure function of the surface
# (base + optional inflection suffix, with no base/inflected collisions), so
# surface equality implies lemma equality and the token -> lemma relaxation
# can only add span matches.
SPAN_STOPWORDS = {"der", "die", "das", "und", "mit", "dem"}
SPAN_BASES = ("haus", "lauf", "kind", "drucker", "familie", "chef", "freude", "arbeit")
SPAN_SUFFIXES = ("", "e", "en")


def random_spans(
    rng: np.random.Generator,
    n_narratives: int = 3,
    max_spans: int = 4,
    max_len: int = 3,
) -> list[CarrierSpan]:
    """Random non-overlapping spans over a few narratives."""
    spans: list[CarrierSpan] = []
    stop_list = sorted(SPAN_STOPWORDS)
    for j in range(n_narratives):
        cursor = 0
        for _ in range(int(rng.integers(0, max_spans + 1))):
            start = cursor + int(rng.integers(0, 4))
            length = int(rng.integers(1, max_len + 1))
            surfaces: list[str] = []
            lemmas: list[str] = []
            for _ in range(length):
                if rng.random() < 0.3:
                    word = stop_list[int(rng.integers(0, len(stop_list)))]
                    surfaces.append(word)
                    lemmas.append(word)
                else:
                    base = SPAN_BASES[int(rng.integers(0, len(SPAN_BASES)))]
                    surfaces.append(base + SPAN_SUFFIXES[int(rng.integers(0, 3))])
                    lemmas.append(base)
            spans.append(
                CarrierSpan(
                    narrative_id=f"n{j}",
                    sentence_id=0,
                    start_index=start,
                    end_index=start + length - 1,
                    tokens=tuple(surfaces),
                    lemmas=tuple(lemmas),
                )
            )
            cursor = start + length
    return spans
