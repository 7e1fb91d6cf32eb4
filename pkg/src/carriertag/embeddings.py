"""Word embedding table with total lookup (OOV falls back to a mean vector)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class EmbeddingFormatError(ValueError):
    pass


class EmbeddingTable:
    """Token -> vector map over a dense float64 matrix.

    Lookups try the surface form, then its lowercase; anything else gets the
    unknown vector (the elementwise mean of all loaded vectors).
    """

    def __init__(self, tokens: list[str], matrix: np.ndarray, unk_vector: np.ndarray | None = None):
        if matrix.ndim != 2 or len(tokens) != matrix.shape[0]:
            raise ValueError("one matrix row per token required")
        self.tokens = list(tokens)
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.index = {tok: i for i, tok in enumerate(tokens)}
        self.dim = self.matrix.shape[1]
        if unk_vector is None:
            unk_vector = self.matrix.mean(axis=0) if len(tokens) else np.zeros(self.dim)
        self.unk_vector = np.asarray(unk_vector, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index or token.lower() in self.index

    def lookup(self, token: str) -> np.ndarray:
        row = self.index.get(token)
        if row is None:
            row = self.index.get(token.lower())
        if row is None:
            return self.unk_vector
        return self.matrix[row]

    def encode(self, tokens: list[str]) -> np.ndarray:
        """Stack lookups into a (len(tokens), dim) matrix."""
        return np.stack([self.lookup(t) for t in tokens]) if tokens else np.zeros((0, self.dim))


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read whitespace-separated ``token v1 .. vD`` lines into a table."""
    tokens: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise EmbeddingFormatError(f"line {lineno}: no vector components")
        if len(parts) - 1 != dim:
            raise EmbeddingFormatError(f"line {lineno}: expected {dim} components, got {len(parts) - 1}")
        try:
            rows.append([float(x) for x in parts[1:]])
        except ValueError:
            raise EmbeddingFormatError(f"line {lineno}: unparsable vector component")
        tokens.append(parts[0])
    if dim is None:
        raise EmbeddingFormatError("empty embedding file")
    return EmbeddingTable(tokens, np.array(rows, dtype=np.float64))


def write_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    lines = []
    for token, row in zip(table.tokens, table.matrix):
        lines.append(token + " " + " ".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
