"""Synthetic multi-annotator corpus generator.

Produces narratives whose statistics track the real data this toolkit was
built for: roughly 7% of tokens carry an I vote from at least one of four
annotators, roughly a third of sentences contain a carrier, three annotators
mark short spans (mean length near 1) and one marks longer ones (mean near
2.3).  Sentences mix a stopword pool, plain content words, sentiment words
and dedicated carrier pools; carrier-pool words also appear outside spans at
a low distractor rate so the task is not trivially lexical.

Everything derives from one numpy Generator, so output is a pure function
of (config, seed).  Pseudo-words inflect with the suffixes "e"/"en" while
keeping the base form as lemma, which exercises token- vs lemma-level span
matching downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .corpus import AnnotatedToken, Narrative, Sentence
from .embeddings import EmbeddingTable

SUFFIXES = ("", "e", "en")
PUNCT_TOKENS = (",", ".")


@dataclass(frozen=True)
class GenConfig:
    narrators: int = 12
    narratives_per_narrator: int = 1
    annotators: int = 4
    sentences_per_narrative_mean: float = 12.0
    sentence_length_mean: float = 20.0
    carrier_sentence_rate: float = 0.32
    extra_anchor_rate: float = 1.8
    mark_prob: float = 0.75
    span_len_means: tuple[float, ...] = (1.1, 1.1, 1.1, 2.6)
    noise_rate: float = 0.01
    stopword_frac: float = 0.4
    sentiment_frac: float = 0.5
    distractor_rate: float = 0.03
    ambient_sentiment_rate: float = 0.05
    inflect_rate: float = 0.3
    comma_rate: float = 0.08
    vocab_stop: int = 20
    vocab_content: int = 150
    vocab_sentiment: int = 40
    carrier_vocab_content: int = 30
    carrier_vocab_sentiment: int = 20
    emb_dim: int = 32
    emb_noise: float = 0.15

    def validate(self) -> None:
        for name in (
            "narrators",
            "narratives_per_narrator",
            "annotators",
            "vocab_stop",
            "vocab_content",
            "vocab_sentiment",
            "carrier_vocab_content",
            "carrier_vocab_sentiment",
            "emb_dim",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in (
            "carrier_sentence_rate",
            "mark_prob",
            "noise_rate",
            "stopword_frac",
            "sentiment_frac",
            "distractor_rate",
            "ambient_sentiment_rate",
            "inflect_rate",
            "comma_rate",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.sentences_per_narrative_mean <= 0 or self.sentence_length_mean <= 0:
            raise ValueError("sentence means must be positive")
        if self.extra_anchor_rate < 0:
            raise ValueError("extra_anchor_rate must be non-negative")
        if len(self.span_len_means) != self.annotators:
            raise ValueError(
                f"span_len_means has {len(self.span_len_means)} entries "
                f"for {self.annotators} annotators"
            )
        if any(m < 1.0 for m in self.span_len_means):
            raise ValueError("span length means must be at least 1")
        if self.emb_noise < 0:
            raise ValueError("emb_noise must be non-negative")


def load_gen_config(path: str | Path) -> GenConfig:
    """Flat key=value file; '#' starts a comment, unknown keys are errors."""
    by_name = {f.name: f for f in fields(GenConfig)}
    overrides = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in by_name:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        if key == "span_len_means":
            overrides[key] = tuple(float(v) for v in value.split(","))
        elif by_name[key].type == "int":
            overrides[key] = int(value)
        elif by_name[key].type == "float":
            overrides[key] = float(value)
        else:
            overrides[key] = value
    config = replace(GenConfig(), **overrides)
    config.validate()
    return config


@dataclass(frozen=True)
class SynthCorpus:
    narratives: list[Narrative]
    stopwords: set[str]
    lexicon: dict[str, float]
    embeddings: EmbeddingTable


def _polarity(index: int) -> float:
    magnitude = 0.3 + 0.7 * (index % 7) / 6.0
    return magnitude if index % 2 == 0 else -magnitude


def _build_vocab(config: GenConfig):
    stop = [f"sw{j:02d}" for j in range(config.vocab_stop)]
    content = [f"fw{j:03d}" for j in range(config.vocab_content)]
    sentiment = [f"ew{j:03d}" for j in range(config.vocab_sentiment)]
    carrier_content = [f"cw{j:03d}" for j in range(config.carrier_vocab_content)]
    carrier_sentiment = [f"ce{j:03d}" for j in range(config.carrier_vocab_sentiment)]
    return stop, content, sentiment, carrier_content, carrier_sentiment


def _build_embeddings(config: GenConfig, rng: np.random.Generator, pools) -> EmbeddingTable:
    dim = config.emb_dim
    tokens: list[str] = []
    vectors: list[np.ndarray] = []
    for pool_words, inflects in pools:
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        for word in pool_words:
            base_vec = direction + config.emb_noise * rng.normal(size=dim)
            variants = SUFFIXES if inflects else ("",)
            for suffix in variants:
                tokens.append(word + suffix)
                vectors.append(base_vec + 0.05 * config.emb_noise * rng.normal(size=dim))
    return EmbeddingTable(tokens, np.array(vectors))


def generate_synthetic(config: GenConfig, seed: int) -> SynthCorpus:
    config.validate()
    rng = np.random.default_rng(seed)
    stop, content, sentiment, carrier_content, carrier_sentiment = _build_vocab(config)

    lexicon = {}
    for j, word in enumerate(sentiment):
        lexicon[word] = _polarity(j)
    for j, word in enumerate(carrier_sentiment):
        lexicon[word] = _polarity(j + 1)
    # inflected variants share the base polarity so surface lookups also hit
    for base in list(lexicon):
        for suffix in SUFFIXES[1:]:
            lexicon[base + suffix] = lexicon[base]

    pools = [
        (list(PUNCT_TOKENS), False),
        (stop, False),
        (content, True),
        (sentiment, True),
        (carrier_content, True),
        (carrier_sentiment, True),
    ]
    embeddings = _build_embeddings(config, rng, pools)

    narratives = []
    for narrator_i in range(config.narrators):
        narrator_id = f"nar{narrator_i:03d}"
        for rep in range(config.narratives_per_narrator):
            narrative_id = f"{narrator_id}-{rep:02d}"
            narratives.append(
                _generate_narrative(
                    config, rng, narrative_id, narrator_id,
                    stop, content, sentiment, carrier_content, carrier_sentiment,
                )
            )
    return SynthCorpus(
        narratives=narratives,
        stopwords=set(stop),
        lexicon=lexicon,
        embeddings=embeddings,
    )


def _generate_narrative(
    config: GenConfig,
    rng: np.random.Generator,
    narrative_id: str,
    narrator_id: str,
    stop, content, sentiment, carrier_content, carrier_sentiment,
) -> Narrative:
    n_sentences = max(2, int(rng.poisson(config.sentences_per_narrative_mean)))
    sentences = []
    index = 0
    for sent_id in range(n_sentences):
        tokens, index = _generate_sentence(
            config, rng, sent_id, index,
            stop, content, sentiment, carrier_content, carrier_sentiment,
        )
        sentences.append(Sentence(sentence_id=sent_id, tokens=tokens))
    return Narrative(narrative_id=narrative_id, narrator_id=narrator_id, sentences=sentences)


def _generate_sentence(
    config: GenConfig,
    rng: np.random.Generator,
    sent_id: int,
    index: int,
    stop, content, sentiment, carrier_content, carrier_sentiment,
):
    n_content = max(4, int(rng.poisson(config.sentence_length_mean)))
    n_annotators = config.annotators
    labels = np.zeros((n_annotators, n_content), dtype=np.int64)

    if rng.random() < config.carrier_sentence_rate:
        n_anchors = min(1 + int(rng.poisson(config.extra_anchor_rate)), n_content)
        starts = np.sort(rng.choice(n_content, size=n_anchors, replace=False))
        for start in starts:
            for a in range(n_annotators):
                if rng.random() < config.mark_prob:
                    length = int(rng.geometric(1.0 / config.span_len_means[a]))
                    labels[a, start : start + length] = 1
    for a in range(n_annotators):
        if rng.random() < config.noise_rate:
            labels[a, int(rng.integers(n_content))] = 1

    any_i = labels.any(axis=0)
    tokens: list[AnnotatedToken] = []

    def emit(surface: str, lemma: str, pos: str, votes) -> None:
        nonlocal index
        tokens.append(
            AnnotatedToken(
                surface=surface,
                lemma=lemma,
                pos=pos,
                is_punct=pos == "PUNCT",
                annotations=tuple(int(v) for v in votes),
                index_in_narrative=index,
                sentence_id=sent_id,
            )
        )
        index += 1

    zeros = (0,) * n_annotators
    for j in range(n_content):
        if any_i[j]:
            if rng.random() < config.sentiment_frac:
                base = carrier_sentiment[int(rng.integers(len(carrier_sentiment)))]
                pos = "ADJ"
            else:
                base = carrier_content[int(rng.integers(len(carrier_content)))]
                pos = "NOUN"
        else:
            r = rng.random()
            if r < config.stopword_frac:
                base = stop[int(rng.integers(len(stop)))]
                pos = "DET"
            elif r < config.stopword_frac + config.distractor_rate:
                pool = carrier_sentiment if rng.random() < 0.5 else carrier_content
                base = pool[int(rng.integers(len(pool)))]
                pos = "ADJ" if pool is carrier_sentiment else "NOUN"
            elif r < config.stopword_frac + config.distractor_rate + config.ambient_sentiment_rate:
                base = sentiment[int(rng.integers(len(sentiment)))]
                pos = "ADJ"
            else:
                base = content[int(rng.integers(len(content)))]
                pos = "NOUN"
        surface = base
        if pos != "DET" and rng.random() < config.inflect_rate:
            surface = base + (SUFFIXES[1] if rng.random() < 0.5 else SUFFIXES[2])
        emit(surface, base, pos, labels[:, j])
        if j < n_content - 1 and rng.random() < config.comma_rate:
            emit(",", ",", "PUNCT", zeros)
    emit(".", ".", "PUNCT", zeros)
    return tokens, index
