"""Bootstrapped self-training with a descending confidence schedule.

Each round labels the unlabeled pool with the current classifier and adopts
tweets whose best event-class score clears the confidence threshold. The
threshold starts at 0.9 and drops by 0.1 whenever a round adopts fewer than
100 tweets; a drop below 0.5 terminates the loop. To keep later rounds from
leaning on the event keywords themselves, a fraction of keyword occurrences
is covered with a placeholder token, re-sampled every training epoch.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .classifier import (
    ChannelBundle,
    LabeledExample,
    ModelCheckpoint,
    TrainConfig,
    predict,
    sample_negatives,
    train,
)
from .corpus import Corpus
from .embeddings import EmbeddingTable
from .ontology import EVENT_CATEGORIES, EventCategory, KeywordLexicon

logger = logging.getLogger("stormwatch.bootstrap")

COVER_TOKEN = "<covered>"


@dataclass(frozen=True)
class BootstrapConfig:
    start_threshold: float = 0.9
    step: float = 0.1
    floor: float = 0.5
    min_selected: int = 100
    dropout_rate: float = 0.2
    max_rounds: int = 100  # safety backstop, never reached under the schedule


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    threshold: float
    n_selected: int
    per_class: dict[str, int]
    selected_ids: tuple[str, ...]


@dataclass
class BootstrapState:
    threshold: float
    round_index: int = 0
    terminated: bool = False
    history: tuple[RoundRecord, ...] = ()

    @property
    def cumulative_added(self) -> int:
        return sum(rec.n_selected for rec in self.history)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "round_index": self.round_index,
            "terminated": self.terminated,
            "history": [
                {"round_index": r.round_index, "threshold": r.threshold,
                 "n_selected": r.n_selected, "per_class": dict(r.per_class),
                 "selected_ids": list(r.selected_ids)}
                for r in self.history
            ],
        }

    @staticmethod
    def from_dict(doc: dict) -> "BootstrapState":
        history = tuple(
            RoundRecord(round_index=r["round_index"], threshold=r["threshold"],
                        n_selected=r["n_selected"], per_class=dict(r["per_class"]),
                        selected_ids=tuple(r["selected_ids"]))
            for r in doc.get("history", []))
        return BootstrapState(threshold=doc["threshold"],
                              round_index=doc.get("round_index", len(history)),
                              terminated=doc.get("terminated", False),
                              history=history)


def _derived_rng(seed: int, *labels) -> np.random.Generator:
    digest = hashlib.sha256(":".join([str(seed), *map(str, labels)]).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def keyword_dropout(tokens: Sequence[str], keyword_positions: Sequence[int],
                    rate: float, rng: np.random.Generator,
                    cover_token: str = COVER_TOKEN) -> tuple[str, ...]:
    """Cover each keyword occurrence independently with probability ``rate``."""
    if not (0.0 <= rate <= 1.0):
        raise ValueError("dropout rate must be in [0, 1]")
    out = list(tokens)
    for pos in keyword_positions:
        if rng.random() < rate:
            out[pos] = cover_token
    return tuple(out)


def make_dropout_transform(lexicon: KeywordLexicon, rate: float, seed: int):
    """Per-epoch bundle rewrite covering keywords in every channel.

    The RNG is derived from (seed, epoch, tweet id), so the covering pattern
    is re-sampled each epoch yet fully reproducible.
    """

    def transform(item: ChannelBundle, epoch: int) -> ChannelBundle:
        if rate == 0.0:
            return item
        rng = _derived_rng(seed, "dropout", epoch, item.tweet_id)
        target = keyword_dropout(item.target, lexicon.keyword_positions(item.target),
                                 rate, rng)
        contexts = tuple(
            (keyword_dropout(toks, lexicon.keyword_positions(toks), rate, rng), w)
            for toks, w in item.contexts)
        replies = tuple(
            keyword_dropout(toks, lexicon.keyword_positions(toks), rate, rng)
            for toks in item.replies)
        return ChannelBundle(tweet_id=item.tweet_id, target=target,
                             contexts=contexts, replies=replies)

    return transform


def schedule_step(state: BootstrapState, record: RoundRecord,
                  config: BootstrapConfig) -> BootstrapState:
    """Advance the confidence schedule after one round's selection count.

    Rounds do run at the floor threshold; only a decrement that would fall
    below the floor terminates.
    """
    next_threshold = state.threshold
    terminated = False
    if record.n_selected < config.min_selected:
        stepped = round(state.threshold - config.step, 10)
        if stepped < config.floor - 1e-9:
            terminated = True
        else:
            next_threshold = stepped
    return BootstrapState(threshold=next_threshold,
                          round_index=state.round_index + 1,
                          terminated=terminated,
                          history=state.history + (record,))


def bootstrap_round(state: BootstrapState, checkpoint: ModelCheckpoint,
                    table: EmbeddingTable, corpus: Corpus,
                    pool_ids: Sequence[str],
                    config: BootstrapConfig) -> tuple[list[LabeledExample], BootstrapState]:
    """Select confident pool tweets at the current threshold and advance state.

    Selection confidence is the maximum event-class score; the catch-all
    score never triggers selection. Fewer than ``min_selected`` adoptions
    lowers the threshold one step; stepping below the floor terminates.
    """
    if state.terminated:
        raise ValueError("bootstrap already terminated")
    if not pool_ids:
        return [], replace(state, terminated=True)

    threshold = state.threshold
    selected: list[LabeledExample] = []
    per_class = {cat.name: 0 for cat in EVENT_CATEGORIES}
    for pred in predict(checkpoint, table, corpus, sorted(pool_ids)):
        event_scores = {cat: pred.scores[cat.value] for cat in EVENT_CATEGORIES}
        best = max(event_scores.values())
        if best >= threshold:
            labels = frozenset(c for c, s in event_scores.items() if s >= threshold)
            selected.append(LabeledExample(
                tweet_id=pred.tweet_id, labels=labels,
                provenance=f"bootstrap:{state.round_index}"))
            for c in labels:
                per_class[c.name] += 1

    record = RoundRecord(round_index=state.round_index, threshold=threshold,
                         n_selected=len(selected), per_class=per_class,
                         selected_ids=tuple(ex.tweet_id for ex in selected))
    next_state = schedule_step(state, record, config)
    logger.info("round %d at threshold %.1f: selected %d (next threshold %s)",
                state.round_index, threshold, len(selected),
                "terminated" if next_state.terminated else f"{next_state.threshold:.1f}")
    return selected, next_state


def bootstrap_run(seed_examples: Sequence[LabeledExample], pool_ids: Sequence[str],
                  corpus: Corpus, table: EmbeddingTable, lexicon: KeywordLexicon,
                  train_config: TrainConfig,
                  config: Optional[BootstrapConfig] = None) -> tuple[ModelCheckpoint, BootstrapState]:
    """Full self-training loop: train on the seed set, then adopt-and-retrain.

    Every training pass (including the first) applies keyword covering and
    freshly sampled negatives, keeping positives and negatives balanced as
    the labeled set grows. Adopted tweets leave the pool permanently.
    """
    config = config or BootstrapConfig()
    transform = make_dropout_transform(lexicon, config.dropout_rate, train_config.seed)

    def retrain(examples: list[LabeledExample], round_index: int) -> ModelCheckpoint:
        positives = [ex for ex in examples if EventCategory.OTHER not in ex.labels]
        neg_seed = int(_derived_rng(train_config.seed, "negatives", round_index)
                       .integers(2 ** 63))
        negatives = sample_negatives(pool, n=len(positives), seed=neg_seed,
                                     exclude={ex.tweet_id for ex in examples})
        try:
            return train(examples + negatives, corpus, table, train_config,
                         epoch_transform=transform)
        except (ValueError, FloatingPointError) as exc:
            raise RuntimeError(f"training failed at bootstrap round {round_index}: {exc}") from exc

    pool = sorted(set(pool_ids) - {ex.tweet_id for ex in seed_examples})
    labeled = list(seed_examples)
    checkpoint = retrain(labeled, round_index=0)

    state = BootstrapState(threshold=config.start_threshold)
    while not state.terminated and state.round_index < config.max_rounds:
        if not pool:
            state = replace(state, terminated=True)
            break
        new_examples, state = bootstrap_round(state, checkpoint, table, corpus,
                                              pool, config)
        if new_examples:
            adopted = {ex.tweet_id for ex in new_examples}
            pool = [t for t in pool if t not in adopted]
            labeled.extend(new_examples)
            checkpoint = retrain(labeled, round_index=state.round_index)
    return checkpoint, state


def save_rounds(state: BootstrapState, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"format": "stormwatch-bootstrap", "version": 1,
                   "state": state.to_dict()}, fh, sort_keys=True)


def load_rounds(path: str | Path) -> BootstrapState:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "stormwatch-bootstrap":
        raise ValueError(f"not a bootstrap round journal: {path}")
    return BootstrapState.from_dict(doc["state"])
