"""Multi-channel event classifier: target, context and reply encoders.

A tweet is represented by the concatenation of three channel embeddings:
the max-pooled target encoding, a time-decay weighted average of up to five
preceding same-author tweets (weight 0.8^minutes), and the unweighted mean
of up to five replies ranked by word overlap with the target. A linear layer
plus elementwise sigmoid maps the concatenation to 10 class scores.

Training minimizes per-class one-vs-all sigmoid cross-entropy, each class
scaled by a weight proportional to 1/ClassSize, with Adam. All gradients are
analytic and finite-difference checked in the test suite.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .corpus import Corpus, Tweet, preceding_tweets, tokenize
from .embeddings import EmbeddingTable
from .encoder import (
    EncodeCache,
    EncoderGrads,
    EncoderParams,
    encode_backward,
    encode_matrix,
    init_encoder,
    load_encoder_arrays,
    maxpool_backward,
    maxpool_with_argmax,
    save_encoder_arrays,
)
from .ontology import EVENT_CATEGORIES, EventCategory

logger = logging.getLogger("stormwatch.classifier")

N_CLASSES = 10
CHECKPOINT_FORMAT = "stormwatch-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LabeledExample:
    """A training instance: tweet id, its label set and where it came from."""

    tweet_id: str
    labels: frozenset[EventCategory]
    provenance: str = "seed"

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("labels must be nonempty")
        if EventCategory.OTHER in self.labels and len(self.labels) > 1:
            raise ValueError("OTHER cannot co-occur with an event category")


@dataclass(frozen=True)
class ChannelBundle:
    """Assembled model input: target tokens, weighted contexts, replies."""

    tweet_id: str
    target: tuple[str, ...]
    contexts: tuple[tuple[tuple[str, ...], float], ...] = ()
    replies: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        for _, w in self.contexts:
            if not (0.0 < w <= 1.0):
                raise ValueError("context weight must be in (0, 1]")


@dataclass(frozen=True)
class Prediction:
    tweet_id: str
    scores: tuple[float, ...]
    labels: frozenset[EventCategory]


@dataclass(frozen=True)
class TrainConfig:
    """Classifier hyperparameters; paper-scale defaults, overridable for tests."""

    hidden_dim: int = 300
    epochs: int = 10
    learning_rate: float = 1e-4
    batch_size: int = 32
    seed: int = 0
    use_contexts: bool = True
    use_replies: bool = True
    n_contexts: int = 5
    n_replies: int = 5
    context_decay: float = 0.8
    decision_threshold: float = 0.5


@dataclass
class ModelCheckpoint:
    target_encoder: EncoderParams
    context_encoder: EncoderParams
    reply_encoder: EncoderParams
    out_w: np.ndarray  # (10, 6H)
    out_b: np.ndarray  # (10,)
    class_weights: np.ndarray  # (10,)
    config: TrainConfig
    epoch_losses: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        h2 = self.target_encoder.output_dim
        if self.out_w.shape != (N_CLASSES, 3 * h2) or self.out_b.shape != (N_CLASSES,):
            raise ValueError("output layer shape inconsistent with encoders")
        for arr in (self.out_w, self.out_b, self.class_weights):
            if not np.isfinite(arr).all():
                raise ValueError("non-finite checkpoint values")


# ---------------------------------------------------------------------------
# Channel assembly
# ---------------------------------------------------------------------------

def gather_replies(corpus: Corpus, tweet: Tweet, limit: int = 5) -> list[tuple[str, ...]]:
    """Token lists of up to ``limit`` direct replies, ranked by word overlap.

    Overlap counts distinct shared tokens with the target; ties go to the
    earlier reply (then id). Replies that tokenize to nothing are skipped.
    """
    target_tokens, _ = tokenize(tweet.text)
    target_set = set(target_tokens)
    candidates = []
    for reply in corpus.replies_to(tweet.id):
        tokens, _ = tokenize(reply.text)
        if not tokens:
            continue
        overlap = len(target_set & set(tokens))
        candidates.append((-overlap, reply.created_at, reply.id, tokens))
    candidates.sort(key=lambda c: c[:3])
    return [tuple(c[3]) for c in candidates[:limit]]


def bundle(corpus: Corpus, tweet: Tweet, n_contexts: int = 5, n_replies: int = 5,
           context_decay: float = 0.8) -> ChannelBundle:
    """Assemble the three-channel input for one target tweet."""
    target_tokens, _ = tokenize(tweet.text)
    contexts = []
    for prior, minutes in preceding_tweets(corpus, tweet, n=n_contexts):
        tokens, _ = tokenize(prior.text)
        if not tokens:
            continue
        contexts.append((tuple(tokens), float(context_decay ** minutes)))
    replies = gather_replies(corpus, tweet, limit=n_replies)
    return ChannelBundle(
        tweet_id=tweet.id,
        target=tuple(target_tokens),
        contexts=tuple(contexts),
        replies=tuple(replies),
    )


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

class _ChannelCache:
    __slots__ = ("caches", "rows", "lens", "weights")

    def __init__(self):
        self.caches: list[EncodeCache] = []
        self.rows: list[np.ndarray] = []
        self.lens: list[int] = []
        self.weights: list[float] = []


def _encode_pool(params: EncoderParams, table: EmbeddingTable,
                 tokens: Sequence[str], cache: Optional[_ChannelCache]) -> np.ndarray:
    hidden, enc_cache = encode_matrix(params, table.lookup(tokens))
    pooled, rows = maxpool_with_argmax(hidden)
    if cache is not None:
        cache.caches.append(enc_cache)
        cache.rows.append(rows)
        cache.lens.append(hidden.shape[0])
    return pooled


class ForwardCache:
    __slots__ = ("target", "contexts", "replies", "r_all", "scores")

    def __init__(self):
        self.target = _ChannelCache()
        self.contexts = _ChannelCache()
        self.replies = _ChannelCache()
        self.r_all = None
        self.scores = None


def forward(checkpoint: ModelCheckpoint, table: EmbeddingTable, item: ChannelBundle,
            cache: Optional[ForwardCache] = None,
            use_contexts: Optional[bool] = None,
            use_replies: Optional[bool] = None) -> np.ndarray:
    """Per-class sigmoid scores for one bundle.

    Channel ablation: with contexts/replies disabled (or absent) the channel
    embedding is the zero vector, one code path for both cases.
    """
    if not item.target:
        raise ValueError(f"empty target tokens for tweet {item.tweet_id}")
    cfg = checkpoint.config
    if use_contexts is None:
        use_contexts = cfg.use_contexts
    if use_replies is None:
        use_replies = cfg.use_replies
    h2 = checkpoint.target_encoder.output_dim

    r1 = _encode_pool(checkpoint.target_encoder, table, item.target,
                      cache.target if cache else None)

    r2 = np.zeros(h2)
    contexts = item.contexts if use_contexts else ()
    if contexts:
        wsum = sum(w for _, w in contexts)
        for tokens, w in contexts:
            pooled = _encode_pool(checkpoint.context_encoder, table, tokens,
                                  cache.contexts if cache else None)
            r2 += (w / wsum) * pooled
            if cache is not None:
                cache.contexts.weights.append(w / wsum)

    r3 = np.zeros(h2)
    replies = item.replies if use_replies else ()
    if replies:
        for tokens in replies:
            pooled = _encode_pool(checkpoint.reply_encoder, table, tokens,
                                  cache.replies if cache else None)
            r3 += pooled / len(replies)
            if cache is not None:
                cache.replies.weights.append(1.0 / len(replies))

    r_all = np.concatenate([r1, r2, r3])
    z = checkpoint.out_w @ r_all + checkpoint.out_b
    scores = 1.0 / (1.0 + np.exp(-z))
    if cache is not None:
        cache.r_all = r_all
        cache.scores = scores
    return scores


@dataclass
class ModelGrads:
    target: EncoderGrads
    context: EncoderGrads
    reply: EncoderGrads
    out_w: np.ndarray
    out_b: np.ndarray

    @staticmethod
    def zeros(checkpoint: ModelCheckpoint) -> "ModelGrads":
        return ModelGrads(
            target=checkpoint.target_encoder.zeros_like(),
            context=checkpoint.context_encoder.zeros_like(),
            reply=checkpoint.reply_encoder.zeros_like(),
            out_w=np.zeros_like(checkpoint.out_w),
            out_b=np.zeros_like(checkpoint.out_b),
        )

    def add_(self, other: "ModelGrads", scale: float = 1.0) -> None:
        self.target.add_(other.target, scale)
        self.context.add_(other.context, scale)
        self.reply.add_(other.reply, scale)
        self.out_w += scale * other.out_w
        self.out_b += scale * other.out_b


def _channel_backward(params: EncoderParams, channel: _ChannelCache,
                      d_channel: np.ndarray, grads: EncoderGrads) -> None:
    for enc_cache, rows, t_len, weight in zip(channel.caches, channel.rows,
                                              channel.lens, channel.weights):
        d_hidden = maxpool_backward(rows, weight * d_channel, t_len)
        grads.add_(encode_backward(params, enc_cache, d_hidden))


def loss_and_grads(checkpoint: ModelCheckpoint, table: EmbeddingTable,
                   item: ChannelBundle, y: np.ndarray,
                   use_contexts: Optional[bool] = None,
                   use_replies: Optional[bool] = None) -> tuple[float, ModelGrads]:
    """Class-weighted multi-label cross-entropy of one example, with gradients."""
    cache = ForwardCache()
    scores = forward(checkpoint, table, item, cache=cache,
                     use_contexts=use_contexts, use_replies=use_replies)
    lam = checkpoint.class_weights
    eps = 1e-12
    loss = float(np.sum(lam * -(y * np.log(scores + eps)
                                + (1.0 - y) * np.log(1.0 - scores + eps))))
    dz = lam * (scores - y)

    grads = ModelGrads.zeros(checkpoint)
    grads.out_w += np.outer(dz, cache.r_all)
    grads.out_b += dz
    d_rall = checkpoint.out_w.T @ dz
    h2 = checkpoint.target_encoder.output_dim
    d_r1, d_r2, d_r3 = d_rall[:h2], d_rall[h2:2 * h2], d_rall[2 * h2:]

    cache.target.weights = [1.0]
    _channel_backward(checkpoint.target_encoder, cache.target, d_r1, grads.target)
    _channel_backward(checkpoint.context_encoder, cache.contexts, d_r2, grads.context)
    _channel_backward(checkpoint.reply_encoder, cache.replies, d_r3, grads.reply)
    return loss, grads


# ---------------------------------------------------------------------------
# Class weights, labels, negatives
# ---------------------------------------------------------------------------

def label_vector(labels: Iterable[EventCategory]) -> np.ndarray:
    y = np.zeros(N_CLASSES)
    for cat in labels:
        y[cat.value] = 1.0
    return y


def class_weights(examples: Sequence[LabeledExample]) -> np.ndarray:
    """Per-class loss weights proportional to 1/ClassSize, summing to 10.

    Absent classes get their size smoothed to 1 so the weight stays finite;
    scaling all sizes by a constant leaves the weights unchanged.
    """
    sizes = np.zeros(N_CLASSES)
    for ex in examples:
        for cat in ex.labels:
            sizes[cat.value] += 1
    sizes = np.maximum(sizes, 1.0)
    inv = 1.0 / sizes
    return N_CLASSES * inv / inv.sum()


def sample_negatives(pool_ids: Sequence[str], n: int, seed: int,
                     exclude: Optional[set[str]] = None) -> list[LabeledExample]:
    """Seeded uniform draw of OTHER-labeled negatives from the unlabeled pool."""
    exclude = exclude or set()
    eligible = sorted(set(pool_ids) - exclude)
    if n > len(eligible):
        logger.warning("negative pool smaller than requested: %d < %d", len(eligible), n)
        n = len(eligible)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(eligible), size=n, replace=False) if n else []
    return [LabeledExample(tweet_id=eligible[i],
                           labels=frozenset({EventCategory.OTHER}),
                           provenance="negative_sample")
            for i in sorted(chosen)]


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

class _Adam:
    def __init__(self, shapes: dict[str, tuple[int, ...]], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k in sorted(params):
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            m_hat = self.m[k] / (1 - b1 ** self.t)
            v_hat = self.v[k] / (1 - b2 ** self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _param_dict(ckpt: ModelCheckpoint) -> dict[str, np.ndarray]:
    out = {"out_w": ckpt.out_w, "out_b": ckpt.out_b}
    for prefix, enc in (("t", ckpt.target_encoder), ("c", ckpt.context_encoder),
                        ("r", ckpt.reply_encoder)):
        for direction in ("fw", "bw"):
            w = getattr(enc, direction)
            out[f"{prefix}_{direction}_W"] = w.W
            out[f"{prefix}_{direction}_U"] = w.U
            out[f"{prefix}_{direction}_b"] = w.b
    return out


def _grad_dict(grads: ModelGrads) -> dict[str, np.ndarray]:
    out = {"out_w": grads.out_w, "out_b": grads.out_b}
    for prefix, enc in (("t", grads.target), ("c", grads.context), ("r", grads.reply)):
        for direction in ("fw", "bw"):
            w = getattr(enc, direction)
            out[f"{prefix}_{direction}_W"] = w.W
            out[f"{prefix}_{direction}_U"] = w.U
            out[f"{prefix}_{direction}_b"] = w.b
    return out


def init_checkpoint(table: EmbeddingTable, config: TrainConfig,
                    examples: Sequence[LabeledExample] = ()) -> ModelCheckpoint:
    rng = np.random.default_rng(config.seed)
    h = config.hidden_dim
    d = table.dim
    target_enc = init_encoder("target", d, h, rng)
    context_enc = init_encoder("context", d, h, rng)
    reply_enc = init_encoder("reply", d, h, rng)
    limit = 1.0 / np.sqrt(3 * 2 * h)
    out_w = rng.uniform(-limit, limit, size=(N_CLASSES, 3 * 2 * h))
    out_b = np.zeros(N_CLASSES)
    lam = class_weights(examples) if examples else np.ones(N_CLASSES)
    return ModelCheckpoint(target_encoder=target_enc, context_encoder=context_enc,
                           reply_encoder=reply_enc, out_w=out_w, out_b=out_b,
                           class_weights=lam, config=config)


BundleTransform = Callable[[ChannelBundle, int], ChannelBundle]


def train(examples: Sequence[LabeledExample], corpus: Corpus, table: EmbeddingTable,
          config: TrainConfig,
          epoch_transform: Optional[BundleTransform] = None) -> ModelCheckpoint:
    """Train the multi-channel classifier on a labeled set.

    ``epoch_transform`` (if given) rewrites each bundle at the start of every
    epoch; the bootstrap stage uses it for keyword covering. Examples whose
    target tweet has no tokens are dropped with a warning.
    """
    if not examples:
        raise ValueError("labeled set is empty")
    distinct = {cat for ex in examples for cat in ex.labels}
    if len(distinct) < 2:
        raise ValueError("training needs at least 2 distinct classes")

    usable: list[tuple[ChannelBundle, np.ndarray]] = []
    for ex in examples:
        b = bundle(corpus, corpus.get(ex.tweet_id), n_contexts=config.n_contexts,
                   n_replies=config.n_replies, context_decay=config.context_decay)
        if not b.target:
            logger.warning("dropping example with empty target tokens: %s", ex.tweet_id)
            continue
        usable.append((b, label_vector(ex.labels)))
    if not usable:
        raise ValueError("no usable training examples (all targets empty)")

    checkpoint = init_checkpoint(table, config, examples)
    params = _param_dict(checkpoint)
    adam = _Adam({k: v.shape for k, v in params.items()}, lr=config.learning_rate)
    rng = np.random.default_rng(np.random.default_rng(config.seed).integers(2 ** 63))

    losses: list[float] = []
    n = len(usable)
    for epoch in range(config.epochs):
        if epoch_transform is not None:
            epoch_items = [(epoch_transform(b, epoch), y) for b, y in usable]
            epoch_items = [(b, y) for b, y in epoch_items if b.target]
        else:
            epoch_items = usable
        order = rng.permutation(len(epoch_items))
        epoch_loss = 0.0
        for start in range(0, len(epoch_items), config.batch_size):
            batch = [epoch_items[i] for i in order[start:start + config.batch_size]]
            total = ModelGrads.zeros(checkpoint)
            batch_loss = 0.0
            for b, y in batch:
                loss, grads = loss_and_grads(checkpoint, table, b, y)
                if not np.isfinite(loss):
                    raise FloatingPointError(
                        f"non-finite loss at epoch {epoch}, tweet {b.tweet_id}")
                batch_loss += loss
                total.add_(grads, scale=1.0 / len(batch))
            adam.step(params, _grad_dict(total))
            epoch_loss += batch_loss
        mean_loss = epoch_loss / max(len(epoch_items), 1)
        losses.append(mean_loss)
        logger.info("epoch %d/%d: training loss %.6f", epoch + 1, config.epochs, mean_loss)
    checkpoint.epoch_losses = tuple(losses)
    return checkpoint


def predict(checkpoint: ModelCheckpoint, table: EmbeddingTable, corpus: Corpus,
            tweet_ids: Sequence[str],
            threshold: Optional[float] = None) -> list[Prediction]:
    """Forward every tweet; assign event classes scoring >= threshold, else OTHER.

    Tweets with no tokens get all-zero scores and the OTHER label.
    """
    cfg = checkpoint.config
    thr = cfg.decision_threshold if threshold is None else threshold
    out = []
    for tweet_id in tweet_ids:
        b = bundle(corpus, corpus.get(tweet_id), n_contexts=cfg.n_contexts,
                   n_replies=cfg.n_replies, context_decay=cfg.context_decay)
        if not b.target:
            out.append(Prediction(tweet_id=tweet_id, scores=(0.0,) * N_CLASSES,
                                  labels=frozenset({EventCategory.OTHER})))
            continue
        scores = forward(checkpoint, table, b)
        labels = frozenset(c for c in EVENT_CATEGORIES if scores[c.value] >= thr)
        if not labels:
            labels = frozenset({EventCategory.OTHER})
        out.append(Prediction(tweet_id=tweet_id,
                              scores=tuple(float(s) for s in scores), labels=labels))
    return out


# ---------------------------------------------------------------------------
# Checkpoint (de)serialization
# ---------------------------------------------------------------------------

def save_checkpoint(checkpoint: ModelCheckpoint, path: str | Path) -> None:
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": vars(checkpoint.config) | {},
        "epoch_losses": list(checkpoint.epoch_losses),
    }
    arrays = {
        "out_w": checkpoint.out_w,
        "out_b": checkpoint.out_b,
        "class_weights": checkpoint.class_weights,
    }
    for prefix, enc in (("t", checkpoint.target_encoder),
                        ("c", checkpoint.context_encoder),
                        ("r", checkpoint.reply_encoder)):
        arrays.update(save_encoder_arrays(enc, prefix))
    np.savez(path, meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"),
                                      dtype=np.uint8), **arrays)


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("format") != CHECKPOINT_FORMAT or meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"not a supported checkpoint file: {path}")
        config = TrainConfig(**meta["config"])
        return ModelCheckpoint(
            target_encoder=load_encoder_arrays(data, "t", "target"),
            context_encoder=load_encoder_arrays(data, "c", "context"),
            reply_encoder=load_encoder_arrays(data, "r", "reply"),
            out_w=data["out_w"],
            out_b=data["out_b"],
            class_weights=data["class_weights"],
            config=config,
            epoch_losses=tuple(meta.get("epoch_losses", ())),
        )
