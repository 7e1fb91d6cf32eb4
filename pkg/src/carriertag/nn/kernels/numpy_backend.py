"""Pure-numpy LSTM sequence kernels (fallback backend).

Both kernels walk one direction of one layer over a whole sequence.  The
input projection ``x_t @ Wx.T + b`` is precomputed for all timesteps by the
caller (one BLAS call); the loops here only carry the recurrent part.
Gate layout along the 4H axis is [input, forget, cell, output].
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_seq_forward(preact: np.ndarray, w_hidden: np.ndarray):
    """Run an LSTM over ``preact`` (T, 4H); ``w_hidden`` is (4H, H).

    Returns (h_seq, cells, tanh_cells, gates) with gates post-activation.
    """
    n_steps, four_h = preact.shape
    hidden = four_h // 4
    h_seq = np.zeros((n_steps, hidden))
    cells = np.zeros((n_steps, hidden))
    tanh_cells = np.zeros((n_steps, hidden))
    gates = np.zeros((n_steps, four_h))
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    for t in range(n_steps):
        a = preact[t] + w_hidden @ h
        gi = _sigmoid(a[:hidden])
        gf = _sigmoid(a[hidden : 2 * hidden])
        gg = np.tanh(a[2 * hidden : 3 * hidden])
        go = _sigmoid(a[3 * hidden :])
        c = gf * c + gi * gg
        tc = np.tanh(c)
        h = go * tc
        gates[t, :hidden] = gi
        gates[t, hidden : 2 * hidden] = gf
        gates[t, 2 * hidden : 3 * hidden] = gg
        gates[t, 3 * hidden :] = go
        cells[t] = c
        tanh_cells[t] = tc
        h_seq[t] = h
    return h_seq, cells, tanh_cells, gates


def lstm_seq_backward(
    d_h_seq: np.ndarray,
    gates: np.ndarray,
    cells: np.ndarray,
    tanh_cells: np.ndarray,
    w_hidden: np.ndarray,
) -> np.ndarray:
    """Backpropagate through time; returns d_preact (T, 4H).

    ``d_h_seq`` holds the upstream gradients on each h_t.  Weight and input
    gradients are recovered by the caller from d_preact with single GEMMs.
    """
    n_steps, hidden = d_h_seq.shape
    d_pre = np.zeros((n_steps, 4 * hidden))
    dh_rec = np.zeros(hidden)
    dc = np.zeros(hidden)
    for t in range(n_steps - 1, -1, -1):
        gi = gates[t, :hidden]
        gf = gates[t, hidden : 2 * hidden]
        gg = gates[t, 2 * hidden : 3 * hidden]
        go = gates[t, 3 * hidden :]
        tc = tanh_cells[t]
        dh = d_h_seq[t] + dh_rec
        d_go = dh * tc
        dc = dc + dh * go * (1.0 - tc * tc)
        c_prev = cells[t - 1] if t > 0 else 0.0
        d_pre[t, :hidden] = dc * gg * gi * (1.0 - gi)
        d_pre[t, hidden : 2 * hidden] = dc * c_prev * gf * (1.0 - gf)
        d_pre[t, 2 * hidden : 3 * hidden] = dc * gi * (1.0 - gg * gg)
        d_pre[t, 3 * hidden :] = d_go * go * (1.0 - go)
        dh_rec = d_pre[t] @ w_hidden
        dc = dc * gf
    return d_pre
