"""Synthetic corpora with planted senses, for tests and desk-scale runs.

Real hurricane corpora are private, so end-to-end behavior is exercised on
generated data where the ground truth is known by construction:

* every category keyword is ambiguous: ~70% of its occurrences use the event
  sense (topic-A vocabulary) and ~30% an unrelated sense (off vocabulary);
* event tweets without any keyword exist in two flavors, bridge (mixing
  topic-A and topic-B words) and pure topic-B, so keyword matching misses
  them and only bootstrapped self-training can chain from A to B;
* background chatter uses its own vocabulary and carries no keywords.

Sense vocabularies are disjoint made-up tokens, so clusters are pure by
construction and an oracle annotator can stand in for the domain expert.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .graph_cluster import ProfiledTweet
from .ontology import DEFAULT_LEMMAS, EVENT_CATEGORIES, EventCategory

BASE_EPOCH = 1503878400  # 2017-08-28 00:00:00 UTC
TEST_OFFSET = 12 * 3600


def two_sense_pool(seed: int, n_per_sense: int = 50, vocab_size: int = 12,
                   tweet_len: int = 8) -> tuple[list[ProfiledTweet], dict[str, str]]:
    """Two planted senses with disjoint vocabularies; all tokens selected.

    Any two same-sense tweets share at least 2*tweet_len - vocab_size words,
    so the in-sense edge rule is guaranteed; cross-sense pairs share nothing.
    Returns the pool and tweet_id -> sense ("a" or "b").
    """
    if tweet_len > vocab_size:
        raise ValueError("tweet_len cannot exceed vocab_size")
    rng = np.random.default_rng(seed)
    pool: list[ProfiledTweet] = []
    truth: dict[str, str] = {}
    for sense in ("a", "b"):
        vocab = [f"{sense}word{i}" for i in range(vocab_size)]
        for k in range(n_per_sense):
            tweet_id = f"{sense}{k:03d}"
            idx = rng.choice(vocab_size, size=tweet_len, replace=False)
            tokens = tuple(vocab[i] for i in idx)
            pool.append(ProfiledTweet(tweet_id=tweet_id, tokens=tokens,
                                      selected=frozenset(tokens)))
            truth[tweet_id] = sense
    return pool, truth


@dataclass
class SyntheticDataset:
    records: list[dict]
    gold: dict[str, frozenset[EventCategory]]
    truth: dict[str, Optional[EventCategory]]
    test_ids: list[str]

    def lines(self) -> list[str]:
        return [json.dumps(r, sort_keys=True) for r in self.records]


@dataclass(frozen=True)
class GeneratorConfig:
    n_keyword: int = 40          # keyword-bearing train tweets per category
    off_sense_rate: float = 0.3  # fraction of keyword tweets using the off sense
    n_bridge: int = 10           # unlabeled A+B mixture tweets per category
    n_pure: int = 10             # unlabeled pure topic-B tweets per category
    n_background: int = 450      # unlabeled background chatter
    n_test_keyword: int = 6      # test event tweets with the keyword
    n_test_topic_a: int = 7      # test event tweets, topic-A words only
    n_test_topic_b: int = 7      # test event tweets, topic-B words only
    n_test_off: int = 4          # test off-sense keyword tweets (gold OTHER)
    n_test_background: int = 60  # test background tweets (gold OTHER)
    vocab_size: int = 12
    tweet_len: int = 8
    context_rate: float = 0.25   # chance an event tweet gets a preceding context
    reply_rate: float = 0.2      # chance an event tweet gets a reply


class _Builder:
    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)
        self.records: list[dict] = []
        self.counter = 0

    def new_id(self) -> str:
        self.counter += 1
        return f"t{self.counter:05d}"

    def add(self, text_tokens: Sequence[str], created_at: int,
            author: Optional[str] = None, reply_to: Optional[str] = None) -> str:
        tweet_id = self.new_id()
        author = author or f"u{tweet_id[1:]}"
        self.records.append({
            "id": tweet_id,
            "author_id": author,
            "created_at": int(created_at),
            "text": " ".join(text_tokens),
            **({"reply_to": reply_to} if reply_to else {}),
        })
        return tweet_id

    def draw(self, vocab: Sequence[str], k: int) -> list[str]:
        idx = self.rng.choice(len(vocab), size=min(k, len(vocab)), replace=False)
        return [vocab[i] for i in idx]


def generate(seed: int, config: Optional[GeneratorConfig] = None) -> SyntheticDataset:
    cfg = config or GeneratorConfig()
    b = _Builder(seed)
    gold: dict[str, frozenset[EventCategory]] = {}
    truth: dict[str, Optional[EventCategory]] = {}
    test_ids: list[str] = []

    vocab_a = {c: [f"{c.name.lower()}a{i}" for i in range(cfg.vocab_size)]
               for c in EVENT_CATEGORIES}
    vocab_b = {c: [f"{c.name.lower()}b{i}" for i in range(cfg.vocab_size)]
               for c in EVENT_CATEGORIES}
    vocab_off = {c: [f"{c.name.lower()}x{i}" for i in range(cfg.vocab_size)]
                 for c in EVENT_CATEGORIES}
    vocab_bg = [f"chatter{i}" for i in range(60)]
    keywords = {c: DEFAULT_LEMMAS[c][0] for c in EVENT_CATEGORIES}

    def train_time() -> int:
        return BASE_EPOCH + int(b.rng.integers(0, TEST_OFFSET - 600))

    def test_time() -> int:
        return BASE_EPOCH + TEST_OFFSET + int(b.rng.integers(0, 3600))

    def compose(words: list[str]) -> list[str]:
        order = b.rng.permutation(len(words))
        return [words[i] for i in order]

    def maybe_decorate(tweet_id: str, topic: Sequence[str], created: int, author: str) -> None:
        if b.rng.random() < cfg.context_rate:
            delta = int(b.rng.integers(30, 240))
            b.add(compose(b.draw(topic, cfg.tweet_len - 1)), created - delta, author=author)
        if b.rng.random() < cfg.reply_rate:
            delta = int(b.rng.integers(60, 600))
            b.add(compose(b.draw(topic, cfg.tweet_len - 2)), created + delta,
                  reply_to=tweet_id)

    # --- train-side tweets -------------------------------------------------
    for cat in EVENT_CATEGORIES:
        kw = keywords[cat]
        n_off = int(round(cfg.n_keyword * cfg.off_sense_rate))
        for i in range(cfg.n_keyword):
            created = train_time()
            off_sense = i < n_off
            topic = vocab_off[cat] if off_sense else vocab_a[cat]
            tokens = compose([kw] + b.draw(topic, cfg.tweet_len - 1))
            tweet_id = b.add(tokens, created)
            truth[tweet_id] = None if off_sense else cat
            if not off_sense:
                maybe_decorate(tweet_id, vocab_a[cat], created, f"u{tweet_id[1:]}")
        for _ in range(cfg.n_bridge):
            half = cfg.tweet_len // 2
            tokens = compose(b.draw(vocab_a[cat], half) + b.draw(vocab_b[cat], half))
            b.add(tokens, train_time())
        for _ in range(cfg.n_pure):
            b.add(compose(b.draw(vocab_b[cat], cfg.tweet_len)), train_time())
    for _ in range(cfg.n_background):
        b.add(compose(b.draw(vocab_bg, cfg.tweet_len)), train_time())

    # --- held-out evaluation tweets ----------------------------------------
    def add_test(tokens: list[str], labels: frozenset[EventCategory],
                 topic: Optional[Sequence[str]] = None) -> None:
        created = test_time()
        tweet_id = b.add(compose(tokens), created)
        gold[tweet_id] = labels
        test_ids.append(tweet_id)
        if topic is not None:
            maybe_decorate(tweet_id, topic, created, f"u{tweet_id[1:]}")

    for cat in EVENT_CATEGORIES:
        kw = keywords[cat]
        lab = frozenset({cat})
        for _ in range(cfg.n_test_keyword):
            add_test([kw] + b.draw(vocab_a[cat], cfg.tweet_len - 1), lab, vocab_a[cat])
        for _ in range(cfg.n_test_topic_a):
            add_test(b.draw(vocab_a[cat], cfg.tweet_len), lab, vocab_a[cat])
        for _ in range(cfg.n_test_topic_b):
            add_test(b.draw(vocab_b[cat], cfg.tweet_len), lab, vocab_b[cat])
        for _ in range(cfg.n_test_off):
            add_test([kw] + b.draw(vocab_off[cat], cfg.tweet_len - 1),
                     frozenset({EventCategory.OTHER}))
    for _ in range(cfg.n_test_background):
        add_test(b.draw(vocab_bg, cfg.tweet_len), frozenset({EventCategory.OTHER}))

    return SyntheticDataset(records=b.records, gold=gold, truth=truth, test_ids=test_ids)


def write_dataset(dataset: SyntheticDataset, outdir: str | Path) -> dict[str, Path]:
    """Write corpus/gold/truth files in the formats the CLI consumes."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": outdir / "corpus.jsonl",
        "gold": outdir / "gold.jsonl",
        "truth": outdir / "truth.json",
    }
    with open(paths["corpus"], "w", encoding="utf-8") as fh:
        for line in dataset.lines():
            fh.write(line + "\n")
    with open(paths["gold"], "w", encoding="utf-8") as fh:
        for tweet_id in dataset.test_ids:
            fh.write(json.dumps({
                "tweet_id": tweet_id,
                "labels": sorted(l.name for l in dataset.gold[tweet_id]),
            }, sort_keys=True) + "\n")
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        json.dump({k: (v.name if v else None) for k, v in sorted(dataset.truth.items())},
                  fh, sort_keys=True)
    return paths
