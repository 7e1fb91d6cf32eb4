"""Neural sequence tagger with hand-written gradients."""

from .model import CHECKPOINT_FORMAT, CHECKPOINT_VERSION, HyperParams, TaggerModel
from .network import (
    EpochLog,
    ForwardCache,
    TokenPrediction,
    analytic_gradients,
    finite_difference_gradients,
    forward,
    gradient_check,
    kl_loss,
    max_relative_error,
    predict,
    predict_many,
    sequence_targets,
    train,
    train_step,
)

__all__ = [
    "CHECKPOINT_FORMAT",
    "CHECKPOINT_VERSION",
    "HyperParams",
    "TaggerModel",
    "EpochLog",
    "ForwardCache",
    "TokenPrediction",
    "analytic_gradients",
    "finite_difference_gradients",
    "forward",
    "gradient_check",
    "kl_loss",
    "max_relative_error",
    "predict",
    "predict_many",
    "sequence_targets",
    "train",
    "train_step",
]
