"""Leave-one-group-out cross-validation over narrators.

Narrators are shuffled deterministically into k groups; fold i tests on
group i, tunes on group (i+1) mod k, and trains on the rest, so no narrator
ever appears on both sides of a split.  Training sequences may use the
carrier-sentence segmentation, but test (and dev) sequences never do: that
segmentation selects sentences by gold labels, which would leak the answer
into evaluation.

Reports are plain functions of the fold results, so a fixed (corpus,
config, seed) triple reproduces them byte for byte.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import crf as crf_mod
from .corpus import Narrative, SegmentationStrategy, preprocess, segment
from .embeddings import EmbeddingTable
from .metrics import (
    NAMED_MATCH_CONFIGS,
    PRF,
    TokenMetrics,
    aggregate_folds,
    format_mean_std,
    grouped_carrier_prf,
    pairwise_agreement,
    token_prf,
)
from .nn import HyperParams, predict as nn_predict, train as nn_train
from .spans import CarrierSpan, annotator_spans, extract_spans, reference_spans, threshold_labels

MODELS = ("nn", "crf")


@dataclass(frozen=True)
class FoldSplit:
    fold: int
    train_narrators: tuple[str, ...]
    dev_narrators: tuple[str, ...]
    test_narrators: tuple[str, ...]


def logo_splits(narrator_ids, k: int = 5, seed: int = 0) -> list[FoldSplit]:
    """Split narrators into k groups (seeded shuffle of the sorted ids,
    remainder spread over the first groups) and derive the k folds."""
    unique = sorted(set(narrator_ids))
    if k < 3:
        raise ValueError("need at least 3 folds so train, dev and test are disjoint")
    if k > len(unique):
        raise ValueError(f"cannot make {k} folds from {len(unique)} narrators")
    order = [unique[i] for i in np.random.default_rng(seed).permutation(len(unique))]
    base, extra = divmod(len(order), k)
    groups: list[tuple[str, ...]] = []
    at = 0
    for g in range(k):
        size = base + (1 if g < extra else 0)
        groups.append(tuple(order[at : at + size]))
        at += size
    splits = []
    for i in range(k):
        dev = (i + 1) % k
        train = tuple(
            narrator for g in range(k) if g not in (i, dev) for narrator in groups[g]
        )
        splits.append(
            FoldSplit(
                fold=i,
                train_narrators=train,
                dev_narrators=groups[dev],
                test_narrators=groups[i],
            )
        )
    return splits


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "nn"
    folds: int = 5
    seed: int = 0
    train_segmentation: str = "sentcarr"
    test_segmentation: str = "sentall"
    threshold: float = 0.25
    strip_punct: bool = True
    lstm_hidden: int = 32
    lstm_layers: int = 2
    fc_units: int = 50
    fc_layers: int = 2
    dropout_rate: float = 0.5
    learning_rate: float = 0.001
    epochs: int = 20
    fine_tune_embeddings: bool = False
    max_seq_len: int = 4096
    crf_window: int = 3
    crf_iterations: int = 100
    crf_l2: float = 0.1
    crf_learning_rate: float = 0.01

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        values = {s.value for s in SegmentationStrategy}
        if self.train_segmentation not in values:
            raise ValueError(f"unknown train_segmentation {self.train_segmentation!r}")
        if self.test_segmentation not in values:
            raise ValueError(f"unknown test_segmentation {self.test_segmentation!r}")
        if self.test_segmentation == SegmentationStrategy.SENT_CARR.value:
            raise ValueError(
                "test_segmentation cannot select carrier sentences: that "
                "filter uses gold labels and would leak them into evaluation"
            )
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must be in (0, 1]")


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Flat key=value file; '#' starts a comment, unknown keys are errors."""
    by_name = {f.name: f for f in fields(ExperimentConfig)}
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
        ftype = by_name[key].type
        if ftype == "int":
            overrides[key] = int(value)
        elif ftype == "float":
            overrides[key] = float(value)
        elif ftype == "bool":
            low = value.lower()
            if low not in ("true", "false", "1", "0"):
                raise ValueError(f"{path}:{lineno}: expected a boolean, got {value!r}")
            overrides[key] = low in ("true", "1")
        else:
            overrides[key] = value
    config = replace(ExperimentConfig(), **overrides)
    config.validate()
    return config


@dataclass(frozen=True)
class FoldResult:
    fold: int
    test_narrators: tuple[str, ...]
    n_train_sequences: int
    n_test_sequences: int
    n_test_tokens: int
    n_predicted_spans: int
    n_reference_spans: int
    token: TokenMetrics
    spans: dict[str, PRF]


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    folds: list[FoldResult]
    iaa: dict[str, float]


def _strategy(value: str) -> SegmentationStrategy:
    return SegmentationStrategy(value)


def run_fold(
    split: FoldSplit,
    narratives: list[Narrative],
    config: ExperimentConfig,
    embeddings: EmbeddingTable | None,
    stopwords: set[str] | None,
    lexicon: dict[str, float] | None,
) -> FoldResult:
    by_narrator: dict[str, list[Narrative]] = {}
    for narrative in narratives:
        by_narrator.setdefault(narrative.narrator_id, []).append(narrative)

    def collect(ids) -> list[Narrative]:
        return [n for narrator in ids for n in by_narrator.get(narrator, [])]

    train_narr = collect(split.train_narrators)
    dev_narr = collect(split.dev_narrators)
    test_narr = collect(split.test_narrators)
    train_seqs = segment(train_narr, _strategy(config.train_segmentation))
    dev_seqs = segment(dev_narr, _strategy(config.test_segmentation))
    test_seqs = segment(test_narr, _strategy(config.test_segmentation))
    if not train_seqs or not dev_seqs or not test_seqs:
        raise ValueError(f"fold {split.fold}: a split came out empty")

    if config.model == "nn":
        if embeddings is None:
            raise ValueError("the neural model needs an embedding table")
        hp = HyperParams(
            emb_dim=embeddings.dim,
            lstm_layers=config.lstm_layers,
            lstm_hidden=config.lstm_hidden,
            fc_units=config.fc_units,
            fc_layers=config.fc_layers,
            dropout_rate=config.dropout_rate,
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            seed=config.seed + split.fold,
            fine_tune_embeddings=config.fine_tune_embeddings,
            max_seq_len=config.max_seq_len,
        )
        model, _ = nn_train(train_seqs, dev_seqs, hp, embeddings)
        predictions = [nn_predict(model, seq) for seq in test_seqs]
    else:
        crf_config = crf_mod.CrfConfig(
            window=config.crf_window,
            learning_rate=config.crf_learning_rate,
            l2=config.crf_l2,
            iterations=config.crf_iterations,
        )
        model, _ = crf_mod.crf_train(train_seqs, lexicon, crf_config)
        predictions = [crf_mod.crf_marginals(model, seq, lexicon) for seq in test_seqs]

    predicted_labels: list[str] = []
    gold_labels: list[str] = []
    predicted_spans: list[CarrierSpan] = []
    for seq, p_i in zip(test_seqs, predictions):
        labels = threshold_labels(list(p_i), config.threshold)
        predicted_labels.extend(labels)
        gold_labels.extend(seq.any_i_labels())
        predicted_spans.extend(extract_spans(labels, seq))
    ref_spans = [span for narrative in test_narr for span in reference_spans(narrative)]

    span_scores = {
        name: grouped_carrier_prf(predicted_spans, ref_spans, match_config, stopwords)
        for name, match_config in NAMED_MATCH_CONFIGS.items()
    }
    return FoldResult(
        fold=split.fold,
        test_narrators=split.test_narrators,
        n_train_sequences=len(train_seqs),
        n_test_sequences=len(test_seqs),
        n_test_tokens=len(gold_labels),
        n_predicted_spans=len(predicted_spans),
        n_reference_spans=len(ref_spans),
        token=token_prf(predicted_labels, gold_labels),
        spans=span_scores,
    )


def _fold_worker(payload) -> FoldResult:
    return run_fold(*payload)


def corpus_iaa(narratives: list[Narrative], stopwords: set[str] | None = None) -> dict[str, float]:
    """Mean pairwise positive agreement per named match configuration."""
    if not narratives:
        raise ValueError("no narratives")
    n_annotators = len(next(narratives[0].tokens()).annotations)
    spans_by_annotator = [
        [span for narrative in narratives for span in annotator_spans(narrative, a)]
        for a in range(n_annotators)
    ]
    return {
        name: pairwise_agreement(spans_by_annotator, match_config, stopwords)
        for name, match_config in NAMED_MATCH_CONFIGS.items()
    }


def run_experiment(
    narratives: list[Narrative],
    config: ExperimentConfig,
    embeddings: EmbeddingTable | None = None,
    stopwords: set[str] | None = None,
    lexicon: dict[str, float] | None = None,
    jobs: int = 1,
) -> ExperimentResult:
    config.validate()
    if config.strip_punct:
        narratives = preprocess(narratives, strip_punct=True)
    splits = logo_splits(
        [n.narrator_id for n in narratives], k=config.folds, seed=config.seed
    )
    payloads = [
        (split, narratives, config, embeddings, stopwords, lexicon) for split in splits
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fold_results = list(pool.map(_fold_worker, payloads))
    else:
        fold_results = [run_fold(*payload) for payload in payloads]
    return ExperimentResult(
        config=config,
        folds=fold_results,
        iaa=corpus_iaa(narratives, stopwords),
    )


def _fold_values(result: ExperimentResult, extract) -> list[float]:
    return [extract(fold) for fold in result.folds]


def report_tsv(result: ExperimentResult) -> str:
    """Machine-readable per-fold table with mean and std rows."""
    names = list(NAMED_MATCH_CONFIGS)
    header = [
        "fold", "test_narrators", "test_tokens", "pred_spans", "ref_spans",
        "token_precision", "token_recall", "token_f1", "token_micro",
    ]
    for name in names:
        header += [f"{name}_precision", f"{name}_recall", f"{name}_f1"]
    rows = ["\t".join(header)]

    def fmt(v: float) -> str:
        return f"{v:.6f}"

    for fold in result.folds:
        row = [
            str(fold.fold),
            ",".join(fold.test_narrators),
            str(fold.n_test_tokens),
            str(fold.n_predicted_spans),
            str(fold.n_reference_spans),
            fmt(fold.token.precision_class_i),
            fmt(fold.token.recall_class_i),
            fmt(fold.token.f1_class_i),
            fmt(fold.token.f1_micro),
        ]
        for name in names:
            prf = fold.spans[name]
            row += [fmt(prf.precision), fmt(prf.recall), fmt(prf.f1)]
        rows.append("\t".join(row))

    metric_columns: list[tuple[str, list[float]]] = [
        ("token_precision", _fold_values(result, lambda f: f.token.precision_class_i)),
        ("token_recall", _fold_values(result, lambda f: f.token.recall_class_i)),
        ("token_f1", _fold_values(result, lambda f: f.token.f1_class_i)),
        ("token_micro", _fold_values(result, lambda f: f.token.f1_micro)),
    ]
    for name in names:
        metric_columns.append(
            (f"{name}_f1", _fold_values(result, lambda f, n=name: f.spans[n].f1))
        )
    for stat, pick in (("mean", 0), ("std", 1)):
        row = [stat, "-", "-", "-", "-"]
        by_name = dict(metric_columns)
        for column in header[5:]:
            if column in by_name:
                row.append(fmt(aggregate_folds(by_name[column])[pick]))
            else:
                row.append("-")
        rows.append("\t".join(row))
    return "\n".join(rows) + "\n"


def report_text(result: ExperimentResult) -> str:
    """Human-readable summary: mean(std) percentages across folds."""
    lines = [
        f"model: {result.config.model}",
        f"folds: {len(result.folds)}",
        f"seed: {result.config.seed}",
        f"threshold: {result.config.threshold}",
        f"train segmentation: {result.config.train_segmentation}",
        f"test segmentation: {result.config.test_segmentation}",
        "",
        "token level (class I), mean(std) percent over folds:",
        f"  precision {format_mean_std(_fold_values(result, lambda f: f.token.precision_class_i))}",
        f"  recall    {format_mean_std(_fold_values(result, lambda f: f.token.recall_class_i))}",
        f"  f1        {format_mean_std(_fold_values(result, lambda f: f.token.f1_class_i))}",
        f"  micro f1  {format_mean_std(_fold_values(result, lambda f: f.token.f1_micro))}",
        "",
        "span level, f1 mean(std) percent over folds (iaa = annotator agreement):",
    ]
    for name, match_config in NAMED_MATCH_CONFIGS.items():
        f1s = _fold_values(result, lambda f, n=name: f.spans[n].f1)
        lines.append(
            f"  {name} [{match_config.describe()}] "
            f"model {format_mean_std(f1s)}  iaa {result.iaa[name] * 100:.1f}"
        )
    return "\n".join(lines) + "\n"
