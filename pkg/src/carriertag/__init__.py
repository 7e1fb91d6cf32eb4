"""Toolkit for recognizing emotion-carrier spans in personal narratives.

Pipeline: parse a multi-annotator IO-labeled corpus, learn per-token label
distributions (neural tagger with hand-written gradients, or a CRF
baseline), threshold the predicted I probability into spans, and score them
against the any-annotator reference rule under a grid of span agreement
criteria.
"""

from .corpus import (
    AnnotatedToken,
    CorpusFormatError,
    CorpusStats,
    LabelDistribution,
    Narrative,
    SegmentationStrategy,
    Sentence,
    Sequence,
    build_distribution,
    corpus_stats,
    load_sentiment_lexicon,
    load_stopwords,
    parse_corpus,
    preprocess,
    segment,
    write_corpus,
)
from .crf import (
    CrfConfig,
    CrfModel,
    crf_log_likelihood,
    crf_marginals,
    crf_objective,
    crf_train,
    label_marginals,
    viterbi_decode,
)
from .cv import (
    ExperimentConfig,
    FoldSplit,
    load_experiment_config,
    logo_splits,
    run_experiment,
)
from .embeddings import EmbeddingTable, load_embeddings, write_embeddings
from .metrics import (
    MatchConfig,
    MatchMode,
    LexicalLevel,
    NAMED_MATCH_CONFIGS,
    PositionRule,
    PRF,
    TokenMetrics,
    carrier_prf,
    grouped_carrier_prf,
    pairwise_agreement,
    positive_agreement,
    token_prf,
)
from .nn import HyperParams, TaggerModel, forward, kl_loss, predict, train
from .optim import AdamState, NumericalError
from .spans import CarrierSpan, extract_spans, reference_spans, threshold_labels
from .synth import GenConfig, generate_synthetic, load_gen_config

__version__ = "0.1.0"
