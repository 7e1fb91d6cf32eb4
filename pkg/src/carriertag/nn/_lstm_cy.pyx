# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM sequence kernels.

Mirrors kernels/numpy_backend.py exactly: same signatures, same gate layout
[input, forget, cell, output], same stable sigmoid.  The per-timestep loops
dominate training time, so they run as straight C here.
"""

import numpy as np

from libc.math cimport exp, tanh


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def lstm_seq_forward(double[:, ::1] preact, double[:, ::1] w_hidden):
    """Run an LSTM over ``preact`` (T, 4H); ``w_hidden`` is (4H, H).

    Returns (h_seq, cells, tanh_cells, gates) with gates post-activation.
    """
    cdef Py_ssize_t n_steps = preact.shape[0]
    cdef Py_ssize_t four_h = preact.shape[1]
    cdef Py_ssize_t hidden = four_h // 4
    h_seq_arr = np.zeros((n_steps, hidden))
    cells_arr = np.zeros((n_steps, hidden))
    tanh_cells_arr = np.zeros((n_steps, hidden))
    gates_arr = np.zeros((n_steps, four_h))
    cdef double[:, ::1] h_seq = h_seq_arr
    cdef double[:, ::1] cells = cells_arr
    cdef double[:, ::1] tanh_cells = tanh_cells_arr
    cdef double[:, ::1] gates = gates_arr
    cdef double[::1] a = np.zeros(four_h)
    cdef Py_ssize_t t, j, k
    cdef double acc, gi, gf, gg, go, c, tc
    with nogil:
        for t in range(n_steps):
            for j in range(four_h):
                acc = preact[t, j]
                if t > 0:
                    for k in range(hidden):
                        acc += w_hidden[j, k] * h_seq[t - 1, k]
                a[j] = acc
            for k in range(hidden):
                gi = _sigmoid(a[k])
                gf = _sigmoid(a[hidden + k])
                gg = tanh(a[2 * hidden + k])
                go = _sigmoid(a[3 * hidden + k])
                c = gi * gg
                if t > 0:
                    c += gf * cells[t - 1, k]
                tc = tanh(c)
                gates[t, k] = gi
                gates[t, hidden + k] = gf
                gates[t, 2 * hidden + k] = gg
                gates[t, 3 * hidden + k] = go
                cells[t, k] = c
                tanh_cells[t, k] = tc
                h_seq[t, k] = go * tc
    return h_seq_arr, cells_arr, tanh_cells_arr, gates_arr


def lstm_seq_backward(
    double[:, ::1] d_h_seq,
    double[:, ::1] gates,
    double[:, ::1] cells,
    double[:, ::1] tanh_cells,
    double[:, ::1] w_hidden,
):
    """Backpropagate through time; returns d_preact (T, 4H)."""
    cdef Py_ssize_t n_steps = d_h_seq.shape[0]
    cdef Py_ssize_t hidden = d_h_seq.shape[1]
    cdef Py_ssize_t four_h = 4 * hidden
    d_pre_arr = np.zeros((n_steps, four_h))
    cdef double[:, ::1] d_pre = d_pre_arr
    cdef double[::1] dh_rec = np.zeros(hidden)
    cdef double[::1] dc = np.zeros(hidden)
    cdef Py_ssize_t t, j, k
    cdef double gi, gf, gg, go, tc, dh, d_go, dck, c_prev, acc
    with nogil:
        for t in range(n_steps - 1, -1, -1):
            for k in range(hidden):
                gi = gates[t, k]
                gf = gates[t, hidden + k]
                gg = gates[t, 2 * hidden + k]
                go = gates[t, 3 * hidden + k]
                tc = tanh_cells[t, k]
                dh = d_h_seq[t, k] + dh_rec[k]
                d_go = dh * tc
                dck = dc[k] + dh * go * (1.0 - tc * tc)
                c_prev = cells[t - 1, k] if t > 0 else 0.0
                d_pre[t, k] = dck * gg * gi * (1.0 - gi)
                d_pre[t, hidden + k] = dck * c_prev * gf * (1.0 - gf)
                d_pre[t, 2 * hidden + k] = dck * gi * (1.0 - gg * gg)
                d_pre[t, 3 * hidden + k] = d_go * go * (1.0 - go)
                dc[k] = dck * gf
            for k in range(hidden):
                acc = 0.0
                for j in range(four_h):
                    acc += d_pre[t, j] * w_hidden[j, k]
                dh_rec[k] = acc
    return d_pre_arr
