"""Tagger model: hyperparameters, parameter initialization, checkpoints.

Architecture (forward pass lives in network.py): pretrained embeddings feed
a stack of bidirectional LSTM layers; the top concatenated states go through
layer normalization, a scalar attention gate that rescales each position,
then tanh inference layers and a two-way softmax over {carrier, outside}.
Class index 0 is I (carrier), index 1 is O.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from carriertag.embeddings import EmbeddingTable

CHECKPOINT_FORMAT = "carriertag-tagger"
CHECKPOINT_VERSION = 1

UNK_TOKEN = "<unk>"


@dataclass(frozen=True)
class HyperParams:
    """Training and architecture settings.

    Defaults are desk-scale: hidden size 32 trains in seconds on synthetic
    corpora.  The full-scale configuration from the original experiments
    uses lstm_hidden=512.
    """

    emb_dim: int = 100
    lstm_layers: int = 2
    lstm_hidden: int = 32
    fc_units: int = 50
    fc_layers: int = 2
    dropout_rate: float = 0.5
    learning_rate: float = 0.001
    epochs: int = 20
    seed: int = 0
    fine_tune_embeddings: bool = False
    max_seq_len: int = 4096

    def validate(self) -> None:
        if self.emb_dim < 1:
            raise ValueError("emb_dim must be positive")
        if self.lstm_layers < 1:
            raise ValueError("lstm_layers must be positive")
        if self.lstm_hidden < 1:
            raise ValueError("lstm_hidden must be positive")
        if self.fc_units < 1:
            raise ValueError("fc_units must be positive")
        if self.fc_layers < 1:
            raise ValueError("fc_layers must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.max_seq_len < 1:
            raise ValueError("max_seq_len must be positive")


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


class TaggerModel:
    """Parameter container.  All parameters are float64 numpy arrays in a
    name-keyed dict so the optimizer and the gradient checker can treat
    them uniformly."""

    def __init__(self, hp: HyperParams, embeddings: EmbeddingTable):
        hp.validate()
        if embeddings.dim != hp.emb_dim:
            raise ValueError(
                f"embedding table has dim {embeddings.dim}, hyperparams say {hp.emb_dim}"
            )
        self.hp = hp
        self.embeddings = embeddings
        self.vocab: list[str] | None = None
        self.params: dict[str, np.ndarray] = {}
        self._init_params(np.random.default_rng(hp.seed))

    def _init_params(self, rng: np.random.Generator) -> None:
        hp = self.hp
        hidden = hp.lstm_hidden
        for layer in range(hp.lstm_layers):
            in_dim = hp.emb_dim if layer == 0 else 2 * hidden
            for direction in ("f", "b"):
                prefix = f"lstm{layer}_{direction}"
                self.params[f"{prefix}_wx"] = _uniform(rng, (4 * hidden, in_dim), in_dim)
                self.params[f"{prefix}_wh"] = _uniform(rng, (4 * hidden, hidden), hidden)
                bias = _uniform(rng, (4 * hidden,), hidden)
                # forget-gate bias starts at 1 so early cell state persists
                bias[hidden : 2 * hidden] = 1.0
                self.params[f"{prefix}_b"] = bias
        width = 2 * hidden
        self.params["ln_gain"] = np.ones(width)
        self.params["ln_bias"] = np.zeros(width)
        self.params["attn_proj_w"] = _uniform(rng, (width, width), width)
        self.params["attn_proj_b"] = _uniform(rng, (width,), width)
        self.params["attn_score_w"] = _uniform(rng, (width,), width)
        prev = width
        for j in range(1, hp.fc_layers + 1):
            self.params[f"fc{j}_w"] = _uniform(rng, (hp.fc_units, prev), prev)
            self.params[f"fc{j}_b"] = _uniform(rng, (hp.fc_units,), prev)
            prev = hp.fc_units
        self.params["out_w"] = _uniform(rng, (2, prev), prev)
        self.params["out_b"] = _uniform(rng, (2,), prev)
        if hp.fine_tune_embeddings:
            self.vocab = list(self.embeddings.tokens) + [UNK_TOKEN]
            emb = np.vstack(
                [self.embeddings.matrix, self.embeddings.unk_vector[None, :]]
            )
            self.params["emb"] = emb.astype(float)
            self._row_index = {tok: i for i, tok in enumerate(self.vocab)}

    def embed(self, surfaces: list[str]) -> tuple[np.ndarray, np.ndarray | None]:
        """Map token surfaces to input vectors.

        Returns (matrix (T, emb_dim), row_indices or None).  Row indices are
        only produced when embeddings are fine-tuned; they point into the
        trainable "emb" block so the backward pass can scatter gradients.
        """
        if not self.hp.fine_tune_embeddings:
            return self.embeddings.encode(surfaces), None
        rows = np.empty(len(surfaces), dtype=np.intp)
        unk_row = len(self.vocab) - 1
        for t, surface in enumerate(surfaces):
            row = self._row_index.get(surface)
            if row is None:
                row = self._row_index.get(surface.lower(), unk_row)
            rows[t] = row
        return self.params["emb"][rows], rows

    def copy_params(self) -> dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for name in self.params:
            self.params[name][...] = params[name]

    def save(self, path: str) -> None:
        meta = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "hyperparams": asdict(self.hp),
            "vocab": self.vocab,
        }
        # write through a handle so numpy keeps the exact path (no .npz suffix)
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta)), **self.params)

    @classmethod
    def load(cls, path: str, embeddings: EmbeddingTable | None = None) -> "TaggerModel":
        with np.load(path, allow_pickle=False) as data:
            if "__meta__" not in data:
                raise ValueError(f"{path}: not a tagger checkpoint (missing metadata)")
            meta = json.loads(str(data["__meta__"]))
            if meta.get("format") != CHECKPOINT_FORMAT:
                raise ValueError(f"{path}: unrecognized checkpoint format")
            if meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(
                    f"{path}: checkpoint version {meta.get('version')} not supported"
                )
            hp = HyperParams(**meta["hyperparams"])
            arrays = {name: data[name] for name in data.files if name != "__meta__"}
        if hp.fine_tune_embeddings:
            vocab = meta["vocab"]
            # rebuild the lookup table from the trained block; the stored
            # final row is the unknown-token vector
            emb = arrays["emb"]
            embeddings = EmbeddingTable(vocab[:-1], emb[:-1], unk_vector=emb[-1])
        elif embeddings is None:
            raise ValueError(
                "checkpoint does not embed its lookup table; pass the embedding table "
                "used at training time"
            )
        model = cls(hp, embeddings)
        for name in model.params:
            if name not in arrays:
                raise ValueError(f"{path}: checkpoint missing parameter block {name!r}")
            if arrays[name].shape != model.params[name].shape:
                raise ValueError(
                    f"{path}: parameter block {name!r} has shape {arrays[name].shape}, "
                    f"expected {model.params[name].shape}"
                )
            model.params[name] = arrays[name].astype(float)
        return model
