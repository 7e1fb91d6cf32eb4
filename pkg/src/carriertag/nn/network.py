"""Forward pass, hand-written backward pass, and training loop.

The loss is the KL divergence from the predicted two-way softmax to the
per-token annotator vote distribution, averaged over tokens.  All gradients
are derived and implemented by hand (no autodiff) and can be verified
against central finite differences with ``gradient_check``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from carriertag.corpus import AnnotatedToken, Sequence, build_distribution
from carriertag.embeddings import EmbeddingTable
from carriertag.metrics import token_prf
from carriertag.optim import AdamState, NumericalError
from carriertag.spans import threshold_labels

from . import kernels
from .model import HyperParams, TaggerModel

KL_EPS = 1e-8
# variance floor only; kept tiny so normalized activations really have unit
# variance, which downstream checks rely on
LN_EPS = 1e-12


@dataclass(frozen=True)
class TokenPrediction:
    p_i: float
    p_o: float
    attention_weight: float


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    dev_f1: float


class ForwardCache:
    """Every intermediate needed by the backward pass and by tests."""

    __slots__ = (
        "surfaces",
        "emb_rows",
        "layer_inputs",
        "dir_data",
        "drop_masks",
        "u",
        "x_hat",
        "inv_std",
        "y",
        "m",
        "alpha",
        "z",
        "fc_inputs",
        "fc_acts",
        "fc_mask",
        "out_input",
        "logits",
        "probs",
    )


def _surfaces(tokens) -> list[str]:
    if isinstance(tokens, Sequence):
        tokens = tokens.tokens
    out = []
    for tok in tokens:
        out.append(tok.surface if isinstance(tok, AnnotatedToken) else str(tok))
    return out


def sequence_targets(sequence: Sequence) -> np.ndarray:
    """Per-token target distributions, shape (T, 2), columns (p_i, p_o)."""
    arr = np.empty((len(sequence.tokens), 2))
    for t, tok in enumerate(sequence.tokens):
        dist = build_distribution(tok)
        arr[t, 0] = dist.p_i
        arr[t, 1] = dist.p_o
    return arr


def kl_loss(pred: np.ndarray, target: np.ndarray, eps: float = KL_EPS) -> float:
    """Mean over tokens of KL(target || clamped prediction).

    Zero target components contribute nothing; predictions are clamped at
    ``eps`` before the log so the loss stays finite.
    """
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if pred.ndim != 2 or pred.shape[0] == 0:
        raise ValueError("expected a non-empty (tokens, classes) array")
    p = np.maximum(pred, eps)
    t_safe = np.where(target > 0, target, 1.0)
    per_token = np.where(target > 0, target * (np.log(t_safe) - np.log(p)), 0.0).sum(axis=1)
    return float(max(per_token.mean(), 0.0))


def _forward_full(
    model: TaggerModel,
    surfaces: list[str],
    training: bool,
    dropout_seed: int | None,
) -> ForwardCache:
    hp = model.hp
    n_tokens = len(surfaces)
    if n_tokens == 0:
        raise ValueError("cannot run the tagger on an empty sequence")
    if n_tokens > hp.max_seq_len:
        raise ValueError(
            f"sequence length {n_tokens} exceeds the hard cap max_seq_len={hp.max_seq_len}"
        )
    cache = ForwardCache()
    cache.surfaces = surfaces
    x, emb_rows = model.embed(surfaces)
    cache.emb_rows = emb_rows

    use_dropout = training and hp.dropout_rate > 0.0
    rng = np.random.default_rng(0 if dropout_seed is None else dropout_seed)
    keep = 1.0 - hp.dropout_rate

    cache.layer_inputs = []
    cache.dir_data = []
    cache.drop_masks = []
    inp = x
    hidden = hp.lstm_hidden
    for layer in range(hp.lstm_layers):
        cache.layer_inputs.append(inp)
        per_dir = {}
        outs = []
        for direction in ("f", "b"):
            x_dir = np.ascontiguousarray(inp if direction == "f" else inp[::-1])
            prefix = f"lstm{layer}_{direction}"
            preact = x_dir @ model.params[f"{prefix}_wx"].T + model.params[f"{prefix}_b"]
            h_seq, cells, tanh_cells, gates = kernels.lstm_seq_forward(
                np.ascontiguousarray(preact), model.params[f"{prefix}_wh"]
            )
            per_dir[direction] = {
                "x": x_dir,
                "h": h_seq,
                "cells": cells,
                "tanh_cells": tanh_cells,
                "gates": gates,
            }
            outs.append(h_seq if direction == "f" else h_seq[::-1])
        cache.dir_data.append(per_dir)
        out = np.concatenate(outs, axis=1)
        if layer < hp.lstm_layers - 1:
            mask = None
            if use_dropout:
                mask = (rng.random(out.shape) >= hp.dropout_rate) / keep
                out = out * mask
            cache.drop_masks.append(mask)
        inp = out

    u = inp
    cache.u = u
    mean = u.mean(axis=1, keepdims=True)
    var = u.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    x_hat = (u - mean) * inv_std
    y = x_hat * model.params["ln_gain"] + model.params["ln_bias"]
    cache.x_hat = x_hat
    cache.inv_std = inv_std
    cache.y = y

    q = y @ model.params["attn_proj_w"].T + model.params["attn_proj_b"]
    m = np.tanh(q)
    scores = m @ model.params["attn_score_w"]
    scores = scores - scores.max()
    exp_scores = np.exp(scores)
    alpha = exp_scores / exp_scores.sum()
    z = y * alpha[:, None]
    cache.m = m
    cache.alpha = alpha
    cache.z = z

    act = z
    cache.fc_inputs = []
    cache.fc_acts = []
    cache.fc_mask = None
    for j in range(1, hp.fc_layers + 1):
        cache.fc_inputs.append(act)
        pre = act @ model.params[f"fc{j}_w"].T + model.params[f"fc{j}_b"]
        a = np.tanh(pre)
        cache.fc_acts.append(a)
        if j == 1 and use_dropout:
            cache.fc_mask = (rng.random(a.shape) >= hp.dropout_rate) / keep
            a = a * cache.fc_mask
        act = a
    cache.out_input = act

    logits = act @ model.params["out_w"].T + model.params["out_b"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp_logits = np.exp(shifted)
    probs = exp_logits / exp_logits.sum(axis=1, keepdims=True)
    cache.logits = logits
    cache.probs = probs
    if not np.isfinite(probs).all():
        raise NumericalError("non-finite activations in the forward pass")
    return cache


def forward(
    model: TaggerModel,
    tokens,
    training: bool = False,
    dropout_seed: int | None = None,
) -> list[TokenPrediction]:
    """Per-token class probabilities plus the attention weight of each
    position.  Class order: index 0 = I (carrier), index 1 = O."""
    cache = _forward_full(model, _surfaces(tokens), training, dropout_seed)
    return [
        TokenPrediction(
            p_i=float(cache.probs[t, 0]),
            p_o=float(cache.probs[t, 1]),
            attention_weight=float(cache.alpha[t]),
        )
        for t in range(len(cache.alpha))
    ]


def predict(model: TaggerModel, tokens) -> np.ndarray:
    """Inference-mode p_i per token (dropout off)."""
    cache = _forward_full(model, _surfaces(tokens), training=False, dropout_seed=None)
    return cache.probs[:, 0].copy()


def predict_many(model: TaggerModel, sequences) -> list[np.ndarray]:
    """Each sequence is tagged independently; order does not matter."""
    return [predict(model, seq) for seq in sequences]


def _backward(model: TaggerModel, cache: ForwardCache, targets: np.ndarray) -> dict:
    hp = model.hp
    probs = cache.probs
    n_tokens = probs.shape[0]
    grads = {name: np.zeros_like(value) for name, value in model.params.items()}

    # KL through the clamp: where the clamp is active the prediction has no
    # influence, so the derivative is exactly zero there (matches the loss
    # the finite-difference checker sees)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = -targets / probs
    d_probs = np.where((targets > 0) & (probs > KL_EPS), raw, 0.0) / n_tokens
    d_logits = probs * (d_probs - (d_probs * probs).sum(axis=1, keepdims=True))

    grads["out_w"] = d_logits.T @ cache.out_input
    grads["out_b"] = d_logits.sum(axis=0)
    d_act = d_logits @ model.params["out_w"]

    for j in range(hp.fc_layers, 0, -1):
        if j == 1 and cache.fc_mask is not None:
            d_act = d_act * cache.fc_mask
        a = cache.fc_acts[j - 1]
        d_pre = d_act * (1.0 - a * a)
        grads[f"fc{j}_w"] = d_pre.T @ cache.fc_inputs[j - 1]
        grads[f"fc{j}_b"] = d_pre.sum(axis=0)
        d_act = d_pre @ model.params[f"fc{j}_w"]
    d_z = d_act

    y = cache.y
    alpha = cache.alpha
    d_alpha = (d_z * y).sum(axis=1)
    d_y = d_z * alpha[:, None]
    d_scores = alpha * (d_alpha - (alpha * d_alpha).sum())
    m = cache.m
    grads["attn_score_w"] = m.T @ d_scores
    d_m = d_scores[:, None] * model.params["attn_score_w"][None, :]
    d_q = d_m * (1.0 - m * m)
    grads["attn_proj_w"] = d_q.T @ y
    grads["attn_proj_b"] = d_q.sum(axis=0)
    d_y = d_y + d_q @ model.params["attn_proj_w"]

    x_hat = cache.x_hat
    grads["ln_gain"] = (d_y * x_hat).sum(axis=0)
    grads["ln_bias"] = d_y.sum(axis=0)
    d_xhat = d_y * model.params["ln_gain"]
    d_u = cache.inv_std * (
        d_xhat
        - d_xhat.mean(axis=1, keepdims=True)
        - x_hat * (d_xhat * x_hat).mean(axis=1, keepdims=True)
    )

    hidden = hp.lstm_hidden
    upstream = d_u
    d_x = None
    for layer in range(hp.lstm_layers - 1, -1, -1):
        per_dir = cache.dir_data[layer]
        d_input = np.zeros_like(cache.layer_inputs[layer])
        for direction in ("f", "b"):
            half = upstream[:, :hidden] if direction == "f" else upstream[:, hidden:][::-1]
            dd = per_dir[direction]
            prefix = f"lstm{layer}_{direction}"
            d_pre = kernels.lstm_seq_backward(
                np.ascontiguousarray(half),
                dd["gates"],
                dd["cells"],
                dd["tanh_cells"],
                model.params[f"{prefix}_wh"],
            )
            grads[f"{prefix}_wx"] = d_pre.T @ dd["x"]
            grads[f"{prefix}_wh"] = d_pre[1:].T @ dd["h"][:-1]
            grads[f"{prefix}_b"] = d_pre.sum(axis=0)
            d_x_dir = d_pre @ model.params[f"{prefix}_wx"]
            d_input += d_x_dir if direction == "f" else d_x_dir[::-1]
        if layer > 0:
            mask = cache.drop_masks[layer - 1]
            upstream = d_input * mask if mask is not None else d_input
        else:
            d_x = d_input

    if hp.fine_tune_embeddings:
        np.add.at(grads["emb"], cache.emb_rows, d_x)
    return grads


def train_step(
    model: TaggerModel,
    optimizer: AdamState,
    surfaces: list[str],
    targets: np.ndarray,
    dropout_seed: int | None = None,
) -> float:
    """One gradient step on one sequence; returns the pre-update loss
    (computed in training mode, so dropout is active)."""
    cache = _forward_full(model, surfaces, training=True, dropout_seed=dropout_seed)
    loss = kl_loss(cache.probs, targets)
    if not np.isfinite(loss):
        raise NumericalError("training loss is non-finite")
    grads = _backward(model, cache, targets)
    optimizer.apply(model.params, grads)
    return loss


def _dropout_seed(base_seed: int, epoch: int, step: int) -> int:
    return ((base_seed + 1) * 1_000_003 + epoch * 131_071 + step) & 0x7FFFFFFF


def _dev_f1(model: TaggerModel, dev_data: list[tuple[list[str], list[str]]]) -> float:
    predicted: list[str] = []
    gold: list[str] = []
    for surfaces, labels in dev_data:
        p_i = predict(model, surfaces)
        predicted.extend(threshold_labels(list(p_i)))
        gold.extend(labels)
    return token_prf(predicted, gold).f1_class_i


def train(
    train_sequences: list[Sequence],
    dev_sequences: list[Sequence],
    hp: HyperParams,
    embeddings: EmbeddingTable,
) -> tuple[TaggerModel, list[EpochLog]]:
    """Train on single-sequence batches with Adam; keep the parameters of
    the epoch with the best dev class-I F1 (earliest epoch wins ties).

    Deterministic for fixed inputs, hyperparameters and seed: the epoch
    shuffles and every dropout mask derive from ``hp.seed``.
    """
    if not train_sequences:
        raise ValueError("training set is empty")
    if not dev_sequences:
        raise ValueError("dev set is empty")
    model = TaggerModel(hp, embeddings)
    optimizer = AdamState(model.params, hp.learning_rate)
    train_data = [(_surfaces(seq), sequence_targets(seq)) for seq in train_sequences]
    dev_data = [(_surfaces(seq), seq.any_i_labels()) for seq in dev_sequences]

    history: list[EpochLog] = []
    best_f1 = -1.0
    best_params = model.copy_params()
    rng = np.random.default_rng(hp.seed)
    for epoch in range(hp.epochs):
        order = rng.permutation(len(train_data))
        losses = np.empty(len(order))
        for step, idx in enumerate(order):
            surfaces, targets = train_data[idx]
            losses[step] = train_step(
                model, optimizer, surfaces, targets,
                dropout_seed=_dropout_seed(hp.seed, epoch, step),
            )
        dev_f1 = _dev_f1(model, dev_data)
        history.append(EpochLog(epoch=epoch, train_loss=float(losses.mean()), dev_f1=dev_f1))
        if dev_f1 > best_f1:
            best_f1 = dev_f1
            best_params = model.copy_params()
    model.set_params(best_params)
    return model, history


def analytic_gradients(
    model: TaggerModel,
    surfaces: list[str],
    targets: np.ndarray,
    training: bool = False,
    dropout_seed: int | None = None,
) -> dict:
    cache = _forward_full(model, surfaces, training, dropout_seed)
    return _backward(model, cache, targets)


def finite_difference_gradients(
    model: TaggerModel,
    surfaces: list[str],
    targets: np.ndarray,
    step: float = 1e-4,
    training: bool = False,
    dropout_seed: int | None = None,
    blocks: list[str] | None = None,
) -> dict:
    """Central finite differences of the loss w.r.t. each parameter entry.

    Slow by design; use tiny models.  With a fixed ``dropout_seed`` the
    same masks apply to every evaluation, so training-mode gradients are
    checkable too.
    """

    def loss_now() -> float:
        cache = _forward_full(model, surfaces, training, dropout_seed)
        return kl_loss(cache.probs, targets)

    out = {}
    for name in blocks if blocks is not None else model.params:
        param = model.params[name]
        grad = np.zeros_like(param)
        flat = param.reshape(-1)
        grad_flat = grad.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + step
            loss_plus = loss_now()
            flat[k] = original - step
            loss_minus = loss_now()
            flat[k] = original
            grad_flat[k] = (loss_plus - loss_minus) / (2.0 * step)
        out[name] = grad
    return out


def max_relative_error(analytic: dict, numeric: dict, floor: float = 1e-3) -> float:
    """Worst element-wise relative error across parameter blocks.

    The denominator is floored so positions where both gradients vanish
    (pure finite-difference noise, around 1e-8) do not dominate the ratio.
    """
    worst = 0.0
    for name, ga in analytic.items():
        if name not in numeric:
            continue
        gn = numeric[name]
        denominator = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), floor)
        worst = max(worst, float((np.abs(ga - gn) / denominator).max()))
    return worst


def gradient_check(
    model: TaggerModel,
    surfaces: list[str],
    targets: np.ndarray,
    step: float = 1e-4,
    training: bool = False,
    dropout_seed: int | None = None,
) -> float:
    analytic = analytic_gradients(model, surfaces, targets, training, dropout_seed)
    numeric = finite_difference_gradients(
        model, surfaces, targets, step=step, training=training, dropout_seed=dropout_seed
    )
    return max_relative_error(analytic, numeric)
