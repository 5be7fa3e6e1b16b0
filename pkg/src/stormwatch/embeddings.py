"""Word-embedding table with file loading and a seeded deterministic default.

The on-disk format is the common pretrained-embedding distribution format:
one token per line, token then D whitespace-separated decimals. Values are
written with full float repr so a save/load cycle is exact.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

UNK_TOKEN = "<unk>"


class EmbeddingTable:
    """Vocabulary to D-dim vectors; out-of-vocabulary tokens map to unk."""

    def __init__(self, vocab: Sequence[str], matrix: np.ndarray, unk: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        unk = np.asarray(unk, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(vocab):
            raise ValueError("matrix rows must match vocabulary size")
        if unk.shape != (matrix.shape[1],):
            raise ValueError("unk vector dimension mismatch")
        if not (np.isfinite(matrix).all() and np.isfinite(unk).all()):
            raise ValueError("embedding values must be finite")
        self.vocab = list(vocab)
        self.index = {tok: i for i, tok in enumerate(self.vocab)}
        self.matrix = matrix
        self.unk = unk

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def vector(self, token: str) -> np.ndarray:
        i = self.index.get(token)
        return self.matrix[i] if i is not None else self.unk

    def lookup(self, tokens: Sequence[str]) -> np.ndarray:
        """(T, D) matrix of token vectors, unk-backed."""
        if len(tokens) == 0:
            return np.zeros((0, self.dim))
        return np.stack([self.vector(t) for t in tokens])


def _token_rng(token: str, seed: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def seeded_embeddings(vocab: Iterable[str], dim: int, seed: int) -> EmbeddingTable:
    """Deterministic per-token vectors derived from sha256(seed, token).

    Independent of vocabulary order, so the same token always gets the same
    vector across corpora and runs.
    """
    vocab = sorted(set(vocab) - {UNK_TOKEN})
    scale = 1.0 / np.sqrt(dim)
    rows = [_token_rng(tok, seed).standard_normal(dim) * scale for tok in vocab]
    matrix = np.stack(rows) if rows else np.zeros((0, dim))
    unk = _token_rng(UNK_TOKEN, seed).standard_normal(dim) * scale
    return EmbeddingTable(vocab, matrix, unk)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    vocab: list[str] = []
    rows: list[np.ndarray] = []
    unk = None
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            vec = np.array([float(v) for v in values], dtype=np.float64)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ValueError(f"line {lineno}: expected {dim} values, got {vec.size}")
            if token == UNK_TOKEN:
                unk = vec
            else:
                vocab.append(token)
                rows.append(vec)
    if dim is None:
        raise ValueError("empty embedding file")
    if unk is None:
        # Common pretrained files ship no unk row; fall back to the mean vector.
        unk = np.mean(rows, axis=0) if rows else np.zeros(dim)
    matrix = np.stack(rows) if rows else np.zeros((0, dim))
    return EmbeddingTable(vocab, matrix, unk)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(UNK_TOKEN + " " + " ".join(repr(float(v)) for v in table.unk) + "\n")
        for token in table.vocab:
            vec = table.matrix[table.index[token]]
            fh.write(token + " " + " ".join(repr(float(v)) for v in vec) + "\n")
