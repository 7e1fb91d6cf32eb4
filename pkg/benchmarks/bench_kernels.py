#!/usr/bin/env python3
"""Benchmark the LSTM kernels: compiled extension vs numpy fallback.

Times the raw sequence kernels at a few (timesteps, hidden) sizes and a
full-model tagging pass, printing one table per section.  Run from the
repository root:

    python3 benchmarks/bench_kernels.py [--repeats 30]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from carriertag.embeddings import EmbeddingTable
from carriertag.nn import HyperParams, TaggerModel, predict
from carriertag.nn import kernels

KERNEL_SIZES = [(32, 16), (128, 32), (512, 64), (2048, 64)]
MODEL_LENGTHS = [20, 200, 1000]


def _time(fn, repeats: int) -> float:
    fn()  # warm up
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _row(label: str, times: dict[str, float]) -> str:
    cells = [f"{label:>14}"]
    for name in sorted(times):
        cells.append(f"{times[name] * 1e3:10.3f} ms")
    if len(times) == 2:
        ratio = times["numpy"] / times["compiled"]
        cells.append(f"{ratio:6.1f}x")
    return "  ".join(cells)


def bench_kernels(repeats: int) -> None:
    rng = np.random.default_rng(0)
    names = kernels.available_backends()
    print(f"available backends: {', '.join(names)}")
    header = ["          size"] + [f"{n:>13}" for n in sorted(names)]
    if len(names) == 2:
        header.append("speedup")
    print("\nlstm_seq_forward")
    print("  ".join(header))
    for n_steps, hidden in KERNEL_SIZES:
        preact = rng.normal(size=(n_steps, 4 * hidden))
        w_hidden = rng.normal(size=(4 * hidden, hidden)) * 0.1
        times = {}
        for name in names:
            kernels.use_backend(name)
            times[name] = _time(lambda: kernels.lstm_seq_forward(preact, w_hidden), repeats)
        print(_row(f"T={n_steps} H={hidden}", times))

    print("\nlstm_seq_backward")
    print("  ".join(header))
    for n_steps, hidden in KERNEL_SIZES:
        preact = rng.normal(size=(n_steps, 4 * hidden))
        w_hidden = rng.normal(size=(4 * hidden, hidden)) * 0.1
        _, cells, tanh_cells, gates = kernels.lstm_seq_forward(preact, w_hidden)
        d_h = rng.normal(size=(n_steps, hidden))
        times = {}
        for name in names:
            kernels.use_backend(name)
            times[name] = _time(
                lambda: kernels.lstm_seq_backward(d_h, gates, cells, tanh_cells, w_hidden),
                repeats,
            )
        print(_row(f"T={n_steps} H={hidden}", times))


def bench_model(repeats: int) -> None:
    rng = np.random.default_rng(1)
    vocab = [f"w{i}" for i in range(500)]
    table = EmbeddingTable(vocab, rng.normal(size=(len(vocab), 100)))
    hp = HyperParams(emb_dim=100, lstm_hidden=32, lstm_layers=2, fc_units=50, fc_layers=2)
    model = TaggerModel(hp, table)
    names = kernels.available_backends()
    header = ["          size"] + [f"{n:>13}" for n in sorted(names)]
    if len(names) == 2:
        header.append("speedup")
    print("\nfull tagger forward pass (2x32 hidden, dim 100)")
    print("  ".join(header))
    for length in MODEL_LENGTHS:
        surfaces = [vocab[int(rng.integers(0, len(vocab)))] for _ in range(length)]
        times = {}
        for name in names:
            kernels.use_backend(name)
            times[name] = _time(lambda: predict(model, surfaces), repeats)
        print(_row(f"T={length}", times))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()
    original = kernels.active_backend()
    try:
        bench_kernels(args.repeats)
        bench_model(args.repeats)
    finally:
        kernels.use_backend(original)


if __name__ == "__main__":
    main()
