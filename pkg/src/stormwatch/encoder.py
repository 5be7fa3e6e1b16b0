"""Bidirectional LSTM sentence encoder with max-pooling and word importance.

Everything is plain float64 numpy with hand-written backpropagation, so
gradients can be verified against central finite differences and every
result is bit-reproducible for fixed parameters.

A token's importance score is the fraction of pooled dimensions at which
its hidden vector attains the per-dimension maximum; words scoring at least
the uniform average 1/T are "selected" and drive the tweet similarity graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .embeddings import EmbeddingTable


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class LstmWeights:
    """One direction's cell parameters; gate order i, f, g, o along axis 0."""

    W: np.ndarray  # (4H, D)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    def __post_init__(self) -> None:
        self.W = np.asarray(self.W, dtype=np.float64)
        self.U = np.asarray(self.U, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        four_h = self.b.size
        if four_h % 4 != 0 or four_h == 0:
            raise ValueError("bias length must be 4*H")
        h = four_h // 4
        if self.W.shape[0] != four_h or self.U.shape != (four_h, h):
            raise ValueError("inconsistent LSTM weight shapes")
        for a in (self.W, self.U, self.b):
            if not np.isfinite(a).all():
                raise ValueError("non-finite LSTM weights")

    @property
    def hidden_dim(self) -> int:
        return self.b.size // 4

    def zeros_like(self) -> "LstmWeights":
        return LstmWeights(np.zeros_like(self.W), np.zeros_like(self.U), np.zeros_like(self.b))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.U.ravel(), self.b])


@dataclass
class EncoderParams:
    """Bidirectional recurrent encoder parameters for one channel role."""

    role: str
    input_dim: int
    hidden_dim: int
    fw: LstmWeights
    bw: LstmWeights

    def __post_init__(self) -> None:
        if self.hidden_dim <= 0:
            raise ValueError("hidden dim must be positive")
        for w in (self.fw, self.bw):
            if w.hidden_dim != self.hidden_dim or w.W.shape[1] != self.input_dim:
                raise ValueError("weights inconsistent with declared dims")

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden_dim

    def zeros_like(self) -> "EncoderGrads":
        return EncoderGrads(self.fw.zeros_like(), self.bw.zeros_like())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.fw.flat(), self.bw.flat()])


@dataclass
class EncoderGrads:
    fw: LstmWeights
    bw: LstmWeights

    def add_(self, other: "EncoderGrads", scale: float = 1.0) -> None:
        for mine, theirs in ((self.fw, other.fw), (self.bw, other.bw)):
            mine.W += scale * theirs.W
            mine.U += scale * theirs.U
            mine.b += scale * theirs.b

    def scale_(self, factor: float) -> None:
        for w in (self.fw, self.bw):
            w.W *= factor
            w.U *= factor
            w.b *= factor

    def flat(self) -> np.ndarray:
        return np.concatenate([self.fw.flat(), self.bw.flat()])


def init_lstm_weights(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmWeights:
    limit = 1.0 / np.sqrt(max(hidden_dim, 1))
    four_h = 4 * hidden_dim
    return LstmWeights(
        W=rng.uniform(-limit, limit, size=(four_h, input_dim)),
        U=rng.uniform(-limit, limit, size=(four_h, hidden_dim)),
        b=np.zeros(four_h),
    )


def init_encoder(role: str, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> EncoderParams:
    return EncoderParams(
        role=role,
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        fw=init_lstm_weights(input_dim, hidden_dim, rng),
        bw=init_lstm_weights(input_dim, hidden_dim, rng),
    )


# ---------------------------------------------------------------------------
# Single-direction LSTM forward/backward
# ---------------------------------------------------------------------------

class _LstmCache:
    __slots__ = ("X", "i", "f", "g", "o", "c", "h")

    def __init__(self, X, i, f, g, o, c, h):
        self.X, self.i, self.f, self.g, self.o, self.c, self.h = X, i, f, g, o, c, h


def lstm_forward(w: LstmWeights, X: np.ndarray) -> tuple[np.ndarray, _LstmCache]:
    T = X.shape[0]
    H = w.hidden_dim
    i = np.empty((T, H)); f = np.empty((T, H)); g = np.empty((T, H)); o = np.empty((T, H))
    c = np.empty((T, H)); h = np.empty((T, H))
    h_prev = np.zeros(H)
    c_prev = np.zeros(H)
    zx = X @ w.W.T + w.b  # input projection for the whole sequence at once
    for t in range(T):
        z = zx[t] + w.U @ h_prev
        i[t] = _sigmoid(z[0:H])
        f[t] = _sigmoid(z[H:2 * H])
        g[t] = np.tanh(z[2 * H:3 * H])
        o[t] = _sigmoid(z[3 * H:4 * H])
        c[t] = f[t] * c_prev + i[t] * g[t]
        h[t] = o[t] * np.tanh(c[t])
        h_prev, c_prev = h[t], c[t]
    return h, _LstmCache(X, i, f, g, o, c, h)


def lstm_backward(w: LstmWeights, cache: _LstmCache, dh_out: np.ndarray) -> tuple[LstmWeights, np.ndarray]:
    """Gradients for a scalar loss given d(loss)/d(h_t); returns (grads, dX)."""
    T, H = cache.h.shape
    grads = w.zeros_like()
    dX = np.zeros_like(cache.X)
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        dh = dh_out[t] + dh_next
        c_prev = cache.c[t - 1] if t > 0 else np.zeros(H)
        h_prev = cache.h[t - 1] if t > 0 else np.zeros(H)
        tanh_c = np.tanh(cache.c[t])
        do = dh * tanh_c
        dc = dc_next + dh * cache.o[t] * (1.0 - tanh_c ** 2)
        di = dc * cache.g[t]
        df = dc * c_prev
        dg = dc * cache.i[t]
        dc_next = dc * cache.f[t]
        dz = np.concatenate([
            di * cache.i[t] * (1.0 - cache.i[t]),
            df * cache.f[t] * (1.0 - cache.f[t]),
            dg * (1.0 - cache.g[t] ** 2),
            do * cache.o[t] * (1.0 - cache.o[t]),
        ])
        grads.W += np.outer(dz, cache.X[t])
        grads.U += np.outer(dz, h_prev)
        grads.b += dz
        dh_next = w.U.T @ dz
        dX[t] = w.W.T @ dz
    return grads, dX


# ---------------------------------------------------------------------------
# Bidirectional encoding
# ---------------------------------------------------------------------------

@dataclass
class EncodeCache:
    X: np.ndarray
    fw: _LstmCache
    bw: _LstmCache


def encode_matrix(params: EncoderParams, X: np.ndarray) -> tuple[np.ndarray, EncodeCache]:
    """Encode a (T, D) input matrix into (T, 2H) hidden states with cache."""
    if X.shape[0] == 0:
        raise ValueError("empty sequence")
    hf, cache_f = lstm_forward(params.fw, X)
    hb_rev, cache_b = lstm_forward(params.bw, X[::-1])
    hidden = np.concatenate([hf, hb_rev[::-1]], axis=1)
    return hidden, EncodeCache(X=X, fw=cache_f, bw=cache_b)


def encode_backward(params: EncoderParams, cache: EncodeCache, d_hidden: np.ndarray) -> EncoderGrads:
    H = params.hidden_dim
    grads_f, _ = lstm_backward(params.fw, cache.fw, d_hidden[:, :H])
    grads_b, _ = lstm_backward(params.bw, cache.bw, d_hidden[:, H:][::-1])
    return EncoderGrads(fw=grads_f, bw=grads_b)


def encode_tokens(params: EncoderParams, table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray:
    """Per-token concatenated forward/backward hidden states, shape (T, 2H)."""
    if len(tokens) == 0:
        raise ValueError("empty sequence")
    hidden, _ = encode_matrix(params, table.lookup(tokens))
    return hidden


def sentence_embedding(hidden: np.ndarray) -> np.ndarray:
    """Max-pool over tokens: per-dimension maximum of the hidden matrix."""
    if hidden.shape[0] == 0:
        raise ValueError("empty hidden matrix")
    return hidden.max(axis=0)


def maxpool_with_argmax(hidden: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if hidden.shape[0] == 0:
        raise ValueError("empty hidden matrix")
    rows = np.argmax(hidden, axis=0)  # first max wins ties
    return hidden[rows, np.arange(hidden.shape[1])], rows


def maxpool_backward(rows: np.ndarray, d_pooled: np.ndarray, t_len: int) -> np.ndarray:
    d_hidden = np.zeros((t_len, d_pooled.size))
    np.add.at(d_hidden, (rows, np.arange(d_pooled.size)), d_pooled)
    return d_hidden


# ---------------------------------------------------------------------------
# Importance scoring and word selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImportanceProfile:
    tweet_id: str
    scores: tuple[float, ...]
    selected: frozenset[str]


def importance_scores(hidden: np.ndarray) -> np.ndarray:
    """Fraction of dimensions each token wins under max-pooling.

    Ties go to the smallest row index, so scores always sum to exactly 1.
    """
    t_len, width = hidden.shape
    if t_len == 0 or width == 0:
        raise ValueError("empty hidden matrix")
    winners = np.argmax(hidden, axis=0)
    counts = np.bincount(winners, minlength=t_len)
    return counts / float(width)


def select_important(tokens: Sequence[str], scores: Sequence[float]) -> frozenset[str]:
    """Words with score >= the uniform average 1/T, deduplicated as a set."""
    if len(tokens) != len(scores):
        raise ValueError("tokens and scores must align")
    if not tokens:
        return frozenset()
    threshold = 1.0 / len(tokens)
    return frozenset(tok for tok, s in zip(tokens, scores) if s >= threshold)


def profile_tokens(params: EncoderParams, table: EmbeddingTable,
                   tweet_id: str, tokens: Sequence[str]) -> ImportanceProfile:
    """Importance profile of one tokenized tweet; empty input gives an empty profile."""
    if len(tokens) == 0:
        return ImportanceProfile(tweet_id=tweet_id, scores=(), selected=frozenset())
    hidden = encode_tokens(params, table, tokens)
    scores = importance_scores(hidden)
    return ImportanceProfile(
        tweet_id=tweet_id,
        scores=tuple(float(s) for s in scores),
        selected=select_important(tokens, scores),
    )


# ---------------------------------------------------------------------------
# Batched forward/backward through pooled sentence embeddings
# ---------------------------------------------------------------------------

def encoder_forward_backward(
    params: EncoderParams,
    table: EmbeddingTable,
    token_lists: Sequence[Sequence[str]],
    example_loss: Callable[[np.ndarray], tuple[float, np.ndarray]],
) -> tuple[float, np.ndarray, EncoderGrads]:
    """Mean per-example loss over pooled embeddings, with parameter gradients.

    ``example_loss`` maps one pooled (2H,) embedding to (scalar, d/d pooled).
    Raises on empty batches, empty sequences and non-finite losses, naming
    the offending example index.
    """
    if len(token_lists) == 0:
        raise ValueError("empty batch")
    n = len(token_lists)
    losses = np.empty(n)
    total = params.zeros_like()
    for idx, tokens in enumerate(token_lists):
        if len(tokens) == 0:
            raise ValueError(f"empty sequence at example {idx}")
        hidden, cache = encode_matrix(params, table.lookup(tokens))
        pooled, rows = maxpool_with_argmax(hidden)
        value, d_pooled = example_loss(pooled)
        if not np.isfinite(value):
            raise ValueError(f"non-finite loss at example {idx}")
        losses[idx] = value
        d_hidden = maxpool_backward(rows, np.asarray(d_pooled, dtype=np.float64), hidden.shape[0])
        total.add_(encode_backward(params, cache, d_hidden), scale=1.0 / n)
    return float(losses.mean()), losses, total


# ---------------------------------------------------------------------------
# Parameter (de)serialization
# ---------------------------------------------------------------------------

PARAMS_FORMAT = "stormwatch-encoder"
PARAMS_VERSION = 1


def save_encoder(params: EncoderParams, path: str | Path) -> None:
    meta = {"format": PARAMS_FORMAT, "version": PARAMS_VERSION, "role": params.role,
            "input_dim": params.input_dim, "hidden_dim": params.hidden_dim}
    np.savez(
        path,
        meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8),
        fw_W=params.fw.W, fw_U=params.fw.U, fw_b=params.fw.b,
        bw_W=params.bw.W, bw_U=params.bw.U, bw_b=params.bw.b,
    )


def load_encoder(path: str | Path) -> EncoderParams:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("format") != PARAMS_FORMAT or meta.get("version") != PARAMS_VERSION:
            raise ValueError(f"not a supported encoder parameter file: {path}")
        return EncoderParams(
            role=meta["role"],
            input_dim=int(meta["input_dim"]),
            hidden_dim=int(meta["hidden_dim"]),
            fw=LstmWeights(data["fw_W"], data["fw_U"], data["fw_b"]),
            bw=LstmWeights(data["bw_W"], data["bw_U"], data["bw_b"]),
        )


def save_encoder_arrays(params: EncoderParams, prefix: str) -> dict[str, np.ndarray]:
    """Pack one encoder's arrays under a prefix, for embedding in a larger file."""
    out = {}
    for direction in ("fw", "bw"):
        w: LstmWeights = getattr(params, direction)
        out[f"{prefix}_{direction}_W"] = w.W
        out[f"{prefix}_{direction}_U"] = w.U
        out[f"{prefix}_{direction}_b"] = w.b
    return out


def load_encoder_arrays(data, prefix: str, role: str) -> EncoderParams:
    fw = LstmWeights(data[f"{prefix}_fw_W"], data[f"{prefix}_fw_U"], data[f"{prefix}_fw_b"])
    bw = LstmWeights(data[f"{prefix}_bw_W"], data[f"{prefix}_bw_U"], data[f"{prefix}_bw_b"])
    return EncoderParams(role=role, input_dim=fw.W.shape[1],
                         hidden_dim=fw.hidden_dim, fw=fw, bw=bw)
