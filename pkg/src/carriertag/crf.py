"""Linear-chain CRF baseline over the two token labels.

Label index order is (O, I): index 0 is O, so argmax-based decoding breaks
ties toward O, matching the span extraction convention that an uncertain
token stays outside.  Features are windowed (default +/-3) word, suffix,
part-of-speech and sentiment-bucket indicators plus explicit boundary
markers.  Training maximizes the summed log-likelihood minus an L2 penalty
(lambda/2 * ||w||^2) with Adam on the full batch; everything is
deterministic (zero initialization, fixed data order).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix

from .corpus import Sequence
from .optim import AdamState, NumericalError

LABELS = ("O", "I")
O_IDX = 0
I_IDX = 1


@dataclass(frozen=True)
class CrfConfig:
    window: int = 3
    learning_rate: float = 0.01
    l2: float = 0.1
    iterations: int = 100

    def validate(self) -> None:
        if self.window < 0:
            raise ValueError("window must be non-negative")
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be non-negative")
        if self.l2 < 0.0:
            raise ValueError("l2 must be non-negative")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")


def token_features(
    tokens, t: int, window: int = 3, lexicon: dict[str, float] | None = None
) -> list[str]:
    """String features for position ``t``; out-of-range offsets yield
    boundary markers instead of word features."""
    feats: list[str] = []
    n = len(tokens)
    for off in range(-window, window + 1):
        j = t + off
        if j < 0:
            feats.append(f"BOS[{off}]")
            continue
        if j >= n:
            feats.append(f"EOS[{off}]")
            continue
        tok = tokens[j]
        surface = tok.surface.lower()
        feats.append(f"w[{off}]={surface}")
        for k in (1, 2, 3):
            if len(surface) >= k:
                feats.append(f"suf{k}[{off}]={surface[-k:]}")
        if tok.pos:
            feats.append(f"pos[{off}]={tok.pos}")
            feats.append(f"posp[{off}]={tok.pos[:2]}")
        polarity = 0.0
        if lexicon is not None:
            found = lexicon.get(surface)
            if found is None:
                found = lexicon.get(tok.lemma.lower())
            if found is not None:
                polarity = found
        # absent from the lexicon counts as neutral, so the bucket feature
        # exists at every in-range offset
        bucket = "POS" if polarity > 0 else ("NEG" if polarity < 0 else "ZERO")
        feats.append(f"sentiment[{off}]={bucket}")
    return feats


class CrfModel:
    def __init__(self, feature_index: dict[str, int], window: int = 3):
        self.feature_index = dict(feature_index)
        self.window = window
        self.w_emission = np.zeros((len(self.feature_index), 2))
        self.w_transition = np.zeros((2, 2))

    def encode(
        self, sequence: Sequence, lexicon: dict[str, float] | None = None
    ) -> list[np.ndarray]:
        """Feature ids per token; features unseen at training time are
        dropped."""
        ids = []
        toks = sequence.tokens
        for t in range(len(toks)):
            feats = token_features(toks, t, self.window, lexicon)
            ids.append(
                np.array(
                    sorted(self.feature_index[f] for f in feats if f in self.feature_index),
                    dtype=np.int64,
                )
            )
        return ids

    def emissions(self, feature_ids: list[np.ndarray]) -> np.ndarray:
        emis = np.zeros((len(feature_ids), 2))
        for t, ids in enumerate(feature_ids):
            if ids.size:
                emis[t] = self.w_emission[ids].sum(axis=0)
        return emis

    def save(self, path: str | Path) -> None:
        lines = ["#carriertag-crf\tv1", f"window\t{self.window}"]
        for a in range(2):
            for b in range(2):
                lines.append(
                    f"transition\t{LABELS[a]}\t{LABELS[b]}\t{float(self.w_transition[a, b])!r}"
                )
        names = sorted(self.feature_index, key=self.feature_index.get)
        lines.append(f"features\t{len(names)}")
        for name in names:
            row = self.w_emission[self.feature_index[name]]
            lines.append(f"f\t{name}\t{float(row[0])!r}\t{float(row[1])!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CrfModel":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith("#carriertag-crf"):
            raise ValueError(f"{path}: not a CRF checkpoint")
        window = None
        transition = np.zeros((2, 2))
        names: list[str] = []
        rows: list[tuple[float, float]] = []
        label_idx = {name: i for i, name in enumerate(LABELS)}
        for line in lines[1:]:
            if not line:
                continue
            parts = line.split("\t")
            kind = parts[0]
            if kind == "window":
                window = int(parts[1])
            elif kind == "transition":
                transition[label_idx[parts[1]], label_idx[parts[2]]] = float(parts[3])
            elif kind == "features":
                continue
            elif kind == "f":
                names.append(parts[1])
                rows.append((float(parts[2]), float(parts[3])))
            else:
                raise ValueError(f"{path}: unrecognized checkpoint line {line!r}")
        if window is None:
            raise ValueError(f"{path}: checkpoint missing window")
        model = cls({name: i for i, name in enumerate(names)}, window=window)
        model.w_transition = transition
        model.w_emission = np.array(rows) if rows else np.zeros((0, 2))
        return model


def _log_forward(emissions: np.ndarray, transition: np.ndarray) -> tuple[np.ndarray, float]:
    n = emissions.shape[0]
    log_alpha = np.empty((n, 2))
    log_alpha[0] = emissions[0]
    for t in range(1, n):
        log_alpha[t] = emissions[t] + np.logaddexp(
            log_alpha[t - 1, 0] + transition[0], log_alpha[t - 1, 1] + transition[1]
        )
    log_z = float(np.logaddexp(log_alpha[-1, 0], log_alpha[-1, 1]))
    return log_alpha, log_z


def _log_backward(emissions: np.ndarray, transition: np.ndarray) -> np.ndarray:
    n = emissions.shape[0]
    log_beta = np.zeros((n, 2))
    for t in range(n - 2, -1, -1):
        nxt = emissions[t + 1] + log_beta[t + 1]
        log_beta[t] = np.logaddexp(transition[:, 0] + nxt[0], transition[:, 1] + nxt[1])
    return log_beta


def _label_score(emissions: np.ndarray, transition: np.ndarray, labels: np.ndarray) -> float:
    score = float(emissions[np.arange(len(labels)), labels].sum())
    if len(labels) > 1:
        score += float(transition[labels[:-1], labels[1:]].sum())
    return score


def crf_log_likelihood(
    model: CrfModel, feature_ids: list[np.ndarray], labels: list[str]
) -> float:
    """Log-likelihood of one labeling under the model."""
    if len(feature_ids) != len(labels):
        raise ValueError("feature/label length mismatch")
    if not labels:
        raise ValueError("empty sequence")
    y = np.array([LABELS.index(lab) for lab in labels], dtype=np.int64)
    emissions = model.emissions(feature_ids)
    _, log_z = _log_forward(emissions, model.w_transition)
    return _label_score(emissions, model.w_transition, y) - log_z


def label_marginals(
    model: CrfModel, sequence: Sequence, lexicon: dict[str, float] | None = None
) -> np.ndarray:
    """Per-token label marginals, shape (T, 2), columns in (O, I) order."""
    emissions = model.emissions(model.encode(sequence, lexicon))
    log_alpha, log_z = _log_forward(emissions, model.w_transition)
    log_beta = _log_backward(emissions, model.w_transition)
    return np.exp(log_alpha + log_beta - log_z)


def crf_marginals(
    model: CrfModel, sequence: Sequence, lexicon: dict[str, float] | None = None
) -> np.ndarray:
    """Marginal probability of label I at every token, shape (T,)."""
    return label_marginals(model, sequence, lexicon)[:, I_IDX].copy()


def viterbi_decode(
    model: CrfModel, sequence: Sequence, lexicon: dict[str, float] | None = None
) -> list[str]:
    """Highest-scoring labeling; among ties the path preferring O at the
    latest differing position wins (argmax picks the first index)."""
    emissions = model.emissions(model.encode(sequence, lexicon))
    n = emissions.shape[0]
    if n == 0:
        return []
    transition = model.w_transition
    delta = emissions[0].copy()
    back = np.zeros((n, 2), dtype=np.int64)
    for t in range(1, n):
        cand = delta[:, None] + transition
        back[t] = cand.argmax(axis=0)
        delta = emissions[t] + cand.max(axis=0)
    path = np.empty(n, dtype=np.int64)
    path[-1] = int(delta.argmax())
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return [LABELS[i] for i in path]


class _Batch:
    """Encoded training set: one sparse token-by-feature design matrix plus
    per-sequence row offsets and gold label ids."""

    def __init__(self, model: CrfModel, sequences: list[Sequence], lexicon):
        rows: list[int] = []
        cols: list[int] = []
        offsets = [0]
        labels: list[np.ndarray] = []
        row = 0
        for seq in sequences:
            if not seq.tokens:
                raise ValueError("cannot train on an empty sequence")
            for ids in model.encode(seq, lexicon):
                rows.extend([row] * ids.size)
                cols.extend(ids.tolist())
                row += 1
            offsets.append(row)
            labels.append(
                np.array([LABELS.index(lab) for lab in seq.any_i_labels()], dtype=np.int64)
            )
        n_features = len(model.feature_index)
        self.design = csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(row, n_features)
        )
        self.offsets = offsets
        self.labels = labels
        self.n_sequences = len(sequences)


def _objective(model: CrfModel, batch: _Batch) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed negative log-likelihood with gradients (no penalty term).

    Overflow in the exponentials only happens once the weights have already
    diverged; the caller checks the objective for finiteness and aborts, so
    the warnings are suppressed rather than surfaced mid-collapse.
    """
    emissions_all = batch.design @ model.w_emission
    d_rows = np.zeros_like(emissions_all)
    grad_t = np.zeros((2, 2))
    total_nll = 0.0
    transition = model.w_transition
    with np.errstate(over="ignore"):
        for s in range(batch.n_sequences):
            lo, hi = batch.offsets[s], batch.offsets[s + 1]
            emissions = emissions_all[lo:hi]
            y = batch.labels[s]
            log_alpha, log_z = _log_forward(emissions, transition)
            log_beta = _log_backward(emissions, transition)
            marginals = np.exp(log_alpha + log_beta - log_z)
            d_rows[lo:hi] = marginals
            d_rows[lo + np.arange(len(y)), y] -= 1.0
            if len(y) > 1:
                pair = np.exp(
                    log_alpha[:-1, :, None]
                    + transition[None, :, :]
                    + emissions[1:, None, :]
                    + log_beta[1:, None, :]
                    - log_z
                )
                grad_t += pair.sum(axis=0)
                np.add.at(grad_t, (y[:-1], y[1:]), -1.0)
            total_nll += log_z - _label_score(emissions, transition, y)
    grad_e = batch.design.T @ d_rows
    return total_nll, np.asarray(grad_e), grad_t


def crf_objective(
    model: CrfModel,
    sequences: list[Sequence],
    lexicon: dict[str, float] | None = None,
    l2: float = 0.1,
) -> tuple[float, dict[str, np.ndarray]]:
    """Regularized training objective and its gradients, exposed so the
    gradients can be verified numerically."""
    if not sequences:
        raise ValueError("no sequences")
    batch = _Batch(model, sequences, lexicon)
    loss, grad_e, grad_t = _objective(model, batch)
    loss += 0.5 * l2 * (float((model.w_emission**2).sum()) + float((model.w_transition**2).sum()))
    return loss, {
        "emission": grad_e + l2 * model.w_emission,
        "transition": grad_t + l2 * model.w_transition,
    }


def crf_train(
    train_sequences: list[Sequence],
    lexicon: dict[str, float] | None = None,
    config: CrfConfig = CrfConfig(),
) -> tuple[CrfModel, list[float]]:
    """Full-batch training from zero-initialized weights; returns the model
    and the per-iteration objective values."""
    config.validate()
    if not train_sequences:
        raise ValueError("training set is empty")
    feature_index: dict[str, int] = {}
    for seq in train_sequences:
        for t in range(len(seq.tokens)):
            for feat in token_features(seq.tokens, t, config.window, lexicon):
                if feat not in feature_index:
                    feature_index[feat] = len(feature_index)
    model = CrfModel(feature_index, window=config.window)
    batch = _Batch(model, train_sequences, lexicon)
    params = {"emission": model.w_emission, "transition": model.w_transition}
    optimizer = AdamState(params, config.learning_rate)
    history: list[float] = []
    for iteration in range(config.iterations):
        loss, grad_e, grad_t = _objective(model, batch)
        # overflow here is caught one line down, not a numerical accident
        with np.errstate(over="ignore"):
            loss += 0.5 * config.l2 * (
                float((model.w_emission**2).sum()) + float((model.w_transition**2).sum())
            )
        if not np.isfinite(loss):
            raise NumericalError(f"objective is non-finite at iteration {iteration}")
        grads = {
            "emission": grad_e + config.l2 * model.w_emission,
            "transition": grad_t + config.l2 * model.w_transition,
        }
        optimizer.apply(params, grads)
        history.append(loss)
    return model, history
