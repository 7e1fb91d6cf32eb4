"""Command-line interface.

Exit codes: 0 on success, 1 on input or validation problems, 2 when a
numerical failure (non-finite loss, gradient, or parameter) aborts training.
Input files are never modified; every subcommand writes only under --out.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import crf as crf_mod
from .corpus import (
    CorpusFormatError,
    SegmentationStrategy,
    corpus_stats,
    load_sentiment_lexicon,
    load_stopwords,
    parse_corpus,
    preprocess,
    segment,
    write_corpus,
)
from .cv import (
    ExperimentConfig,
    load_experiment_config,
    report_text,
    report_tsv,
    run_experiment,
)
from .embeddings import load_embeddings, write_embeddings
from .heatmap import HeatmapFormat, heatmap_document, heatmap_export
from .metrics import (
    NAMED_MATCH_CONFIGS,
    grouped_carrier_prf,
    token_prf,
)
from .nn import HyperParams, TaggerModel, predict as nn_predict, train as nn_train
from .nn.network import sequence_targets
from .optim import NumericalError
from .spans import dump_spans, extract_spans, reference_spans, threshold_labels
from .synth import GenConfig, generate_synthetic, load_gen_config

SEGMENTATIONS = tuple(s.value for s in SegmentationStrategy)


class _Parser(argparse.ArgumentParser):
    # bad usage is an input problem: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="carriertag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic annotated corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="generator config (key=value lines)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("stats", help="print corpus statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strip-punct", action="store_true",
                   help="drop punctuation tokens before computing statistics")

    p = sub.add_parser("train", help="train a tagger")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dev-corpus",
                   help="held-out corpus for model selection (neural model); "
                        "defaults to the training corpus")
    p.add_argument("--config", help="experiment config (key=value lines)")
    p.add_argument("--model-type", choices=("nn", "crf"),
                   help="overrides the config's model field")
    p.add_argument("--embeddings", help="embedding table (neural model)")
    p.add_argument("--lexicon", help="sentiment lexicon (CRF features)")
    p.add_argument("--out", required=True, help="model checkpoint path")
    p.add_argument("--seed", type=int, help="overrides the config's seed")
    p.add_argument("--segmentation", choices=SEGMENTATIONS,
                   help="training segmentation (default from config)")

    p = sub.add_parser("predict", help="tag a corpus with a trained model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--lexicon")
    p.add_argument("--segmentation", choices=SEGMENTATIONS, default="sentall")
    p.add_argument("--threshold", type=float, default=0.25)
    p.add_argument("--keep-punct", action="store_true",
                   help="tag punctuation tokens too (default strips them)")
    p.add_argument("--out", help="token TSV output (default stdout)")
    p.add_argument("--spans-out", help="also write extracted spans as TSV")

    p = sub.add_parser("eval", help="evaluate a trained model against the reference rule")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--lexicon")
    p.add_argument("--stopwords")
    p.add_argument("--segmentation", choices=("sentall", "narrative"), default="sentall")
    p.add_argument("--threshold", type=float, default=0.25)
    p.add_argument("--keep-punct", action="store_true")
    p.add_argument("--match", choices=tuple(NAMED_MATCH_CONFIGS) + ("all",), default="all")
    p.add_argument("--out", help="write the report here as well")

    p = sub.add_parser("crossval", help="run leave-narrators-out cross-validation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="experiment config (key=value lines)")
    p.add_argument("--embeddings")
    p.add_argument("--lexicon")
    p.add_argument("--stopwords")
    p.add_argument("--seed", type=int, help="overrides the config's seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel fold workers")
    p.add_argument("--out", help="directory for report.tsv and report.txt")

    p = sub.add_parser("heatmap", help="render model-vs-reference heatmaps")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--lexicon")
    p.add_argument("--format", choices=("ansi", "html"), default="ansi")
    p.add_argument("--segmentation", choices=SEGMENTATIONS, default="sentall")
    p.add_argument("--keep-punct", action="store_true")
    p.add_argument("--limit", type=int, default=0,
                   help="render at most this many sequences (0 = all)")
    p.add_argument("--out", help="output file (default stdout)")
    return parser


def _load_model(path: str, embeddings_path: str | None):
    """Sniff the checkpoint kind: npz archives are neural, text is CRF."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic.startswith(b"PK"):
        embeddings = load_embeddings(embeddings_path) if embeddings_path else None
        return "nn", TaggerModel.load(path, embeddings)
    return "crf", crf_mod.CrfModel.load(path)


def _prepare_narratives(args):
    narratives = parse_corpus(args.corpus)
    if not getattr(args, "keep_punct", False):
        narratives = preprocess(narratives, strip_punct=True)
    return narratives


def _predict_p_i(kind, model, sequences, lexicon):
    if kind == "nn":
        return [nn_predict(model, seq) for seq in sequences]
    return [crf_mod.crf_marginals(model, seq, lexicon) for seq in sequences]


def _cmd_synth(args) -> int:
    config = load_gen_config(args.config) if args.config else GenConfig()
    corpus = generate_synthetic(config, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus.narratives, out / "corpus.tsv")
    (out / "stopwords.txt").write_text(
        "\n".join(sorted(corpus.stopwords)) + "\n", encoding="utf-8"
    )
    (out / "lexicon.tsv").write_text(
        "".join(f"{w}\t{p!r}\n" for w, p in sorted(corpus.lexicon.items())),
        encoding="utf-8",
    )
    write_embeddings(corpus.embeddings, out / "embeddings.txt")
    stats = corpus_stats(corpus.narratives)
    print(
        f"wrote {len(corpus.narratives)} narratives to {out} "
        f"({stats.frac_tokens_any_i * 100:.1f}% tokens carry an I vote, "
        f"{stats.frac_sentences_with_carrier * 100:.1f}% carrier sentences)"
    )
    return 0


def _cmd_stats(args) -> int:
    narratives = parse_corpus(args.corpus)
    if args.strip_punct:
        narratives = preprocess(narratives, strip_punct=True)
    stats = corpus_stats(narratives)
    print(f"narratives: {len(narratives)}")
    print(f"tokens_any_i_percent: {stats.frac_tokens_any_i * 100:.2f}")
    print(f"sentences_with_carrier_percent: {stats.frac_sentences_with_carrier * 100:.2f}")
    print(f"mean_tokens_per_narrative: {stats.mean_tokens_per_narrative:.2f}")
    print(f"mean_tokens_per_sentence: {stats.mean_tokens_per_sentence:.2f}")
    print(f"mean_carriers_per_narrative: {stats.mean_carriers_per_narrative:.2f}")
    for a, length in enumerate(stats.mean_carrier_len_per_annotator):
        print(f"mean_carrier_len_annotator_{a}: {length:.2f}")
    return 0


def _cmd_train(args) -> int:
    config = load_experiment_config(args.config) if args.config else ExperimentConfig()
    model_type = args.model_type or config.model
    seed = args.seed if args.seed is not None else config.seed
    segmentation = args.segmentation or config.train_segmentation
    narratives = parse_corpus(args.corpus)
    if config.strip_punct:
        narratives = preprocess(narratives, strip_punct=True)
    train_seqs = segment(narratives, SegmentationStrategy(segmentation))
    if model_type == "nn":
        if not args.embeddings:
            raise ValueError("the neural model needs --embeddings")
        embeddings = load_embeddings(args.embeddings)
        if args.dev_corpus:
            dev_narratives = parse_corpus(args.dev_corpus)
            if config.strip_punct:
                dev_narratives = preprocess(dev_narratives, strip_punct=True)
        else:
            dev_narratives = narratives
        dev_seqs = segment(dev_narratives, SegmentationStrategy(config.test_segmentation))
        hp = HyperParams(
            emb_dim=embeddings.dim,
            lstm_layers=config.lstm_layers,
            lstm_hidden=config.lstm_hidden,
            fc_units=config.fc_units,
            fc_layers=config.fc_layers,
            dropout_rate=config.dropout_rate,
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            seed=seed,
            fine_tune_embeddings=config.fine_tune_embeddings,
            max_seq_len=config.max_seq_len,
        )
        model, history = nn_train(train_seqs, dev_seqs, hp, embeddings)
        model.save(args.out)
        for entry in history:
            print(
                f"epoch {entry.epoch}: train_loss {entry.train_loss:.4f} "
                f"dev_f1 {entry.dev_f1:.4f}"
            )
    else:
        lexicon = load_sentiment_lexicon(args.lexicon) if args.lexicon else None
        crf_config = crf_mod.CrfConfig(
            window=config.crf_window,
            learning_rate=config.crf_learning_rate,
            l2=config.crf_l2,
            iterations=config.crf_iterations,
        )
        model, history = crf_mod.crf_train(train_seqs, lexicon, crf_config)
        model.save(args.out)
        if history:
            print(f"objective {history[0]:.4f} -> {history[-1]:.4f} "
                  f"over {len(history)} iterations")
    print(f"saved {model_type} model to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    kind, model = _load_model(args.model, args.embeddings)
    lexicon = load_sentiment_lexicon(args.lexicon) if args.lexicon else None
    narratives = _prepare_narratives(args)
    sequences = segment(narratives, SegmentationStrategy(args.segmentation))
    predictions = _predict_p_i(kind, model, sequences, lexicon)
    lines = ["narrative_id\tsentence_id\ttoken_index\tsurface\tp_i\tlabel"]
    all_spans = []
    for seq, p_i in zip(sequences, predictions):
        labels = threshold_labels(list(p_i), args.threshold)
        for tok, p, label in zip(seq.tokens, p_i, labels):
            sent = tok.sentence_id
            lines.append(
                f"{seq.narrative_id}\t{sent}\t{tok.index_in_narrative}"
                f"\t{tok.surface}\t{p:.6f}\t{label}"
            )
        all_spans.extend(extract_spans(labels, seq))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.spans_out:
        dump_spans(all_spans, args.spans_out)
    return 0


def _cmd_eval(args) -> int:
    kind, model = _load_model(args.model, args.embeddings)
    lexicon = load_sentiment_lexicon(args.lexicon) if args.lexicon else None
    stopwords = load_stopwords(args.stopwords) if args.stopwords else None
    narratives = _prepare_narratives(args)
    sequences = segment(narratives, SegmentationStrategy(args.segmentation))
    predictions = _predict_p_i(kind, model, sequences, lexicon)
    predicted_labels: list[str] = []
    gold_labels: list[str] = []
    predicted_spans = []
    for seq, p_i in zip(sequences, predictions):
        labels = threshold_labels(list(p_i), args.threshold)
        predicted_labels.extend(labels)
        gold_labels.extend(seq.any_i_labels())
        predicted_spans.extend(extract_spans(labels, seq))
    ref_spans = [span for n in narratives for span in reference_spans(n)]
    token = token_prf(predicted_labels, gold_labels)
    lines = [
        f"token_precision_i: {token.precision_class_i:.4f}",
        f"token_recall_i: {token.recall_class_i:.4f}",
        f"token_f1_i: {token.f1_class_i:.4f}",
        f"token_f1_micro: {token.f1_micro:.4f}",
        f"predicted_spans: {len(predicted_spans)}",
        f"reference_spans: {len(ref_spans)}",
    ]
    names = list(NAMED_MATCH_CONFIGS) if args.match == "all" else [args.match]
    for name in names:
        prf = grouped_carrier_prf(
            predicted_spans, ref_spans, NAMED_MATCH_CONFIGS[name], stopwords
        )
        lines.append(
            f"span_{name}: precision {prf.precision:.4f} recall {prf.recall:.4f} "
            f"f1 {prf.f1:.4f}"
        )
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    return 0


def _cmd_crossval(args) -> int:
    config = load_experiment_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    narratives = parse_corpus(args.corpus)
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    lexicon = load_sentiment_lexicon(args.lexicon) if args.lexicon else None
    stopwords = load_stopwords(args.stopwords) if args.stopwords else None
    result = run_experiment(
        narratives, config,
        embeddings=embeddings, stopwords=stopwords, lexicon=lexicon,
        jobs=args.jobs,
    )
    text = report_text(result)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.tsv").write_text(report_tsv(result), encoding="utf-8")
        (out / "report.txt").write_text(text, encoding="utf-8")
    return 0


def _cmd_heatmap(args) -> int:
    kind, model = _load_model(args.model, args.embeddings)
    lexicon = load_sentiment_lexicon(args.lexicon) if args.lexicon else None
    narratives = _prepare_narratives(args)
    sequences = segment(narratives, SegmentationStrategy(args.segmentation))
    if args.limit > 0:
        sequences = sequences[: args.limit]
    fmt = HeatmapFormat(args.format)
    predictions = _predict_p_i(kind, model, sequences, lexicon)
    fragments = []
    for seq, p_i in zip(sequences, predictions):
        reference = sequence_targets(seq)[:, 0]
        fragments.append(heatmap_export(seq, list(p_i), list(reference), fmt))
    document = heatmap_document(fragments, fmt)
    if args.out:
        Path(args.out).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "stats": _cmd_stats,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "crossval": _cmd_crossval,
    "heatmap": _cmd_heatmap,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, CorpusFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
