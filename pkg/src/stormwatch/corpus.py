"""Message corpus: ingestion, normalization, tokenization and indexing.

The corpus is immutable once built. It keeps three views of the data:
tweets by id, per-author timelines (ascending by time) and a direct-reply
index, which downstream stages use to assemble context and reply channels.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

logger = logging.getLogger("stormwatch.corpus")

SNAPSHOT_FORMAT = "stormwatch-corpus"
SNAPSHOT_VERSION = 1

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
# Alphanumeric runs; internal hyphens are kept ("i-10"), everything else splits.
_TOKEN_RE = re.compile(r"\w+(?:-\w+)*")


@dataclass(frozen=True)
class Tweet:
    """One message record. ``created_at`` is UTC epoch seconds."""

    id: str
    author_id: str
    created_at: int
    text: str
    reply_to: Optional[str] = None
    is_retweet: bool = False


@dataclass(frozen=True)
class TokenizedTweet:
    """Normalized tokens of one tweet plus their source character spans."""

    tweet_id: str
    tokens: tuple[str, ...]
    char_spans: tuple[tuple[int, int], ...]


def tokenize(text: str) -> tuple[tuple[str, ...], tuple[tuple[int, int], ...]]:
    """Tokenize raw message text.

    Rules: URLs and @-mentions are removed, the leading '#' of hashtags is
    stripped, tokens are lowercased and split on whitespace/punctuation with
    internal hyphens kept. Spans index into the original text.
    """
    masked = _URL_RE.sub(lambda m: " " * len(m.group(0)), text)
    masked = _MENTION_RE.sub(lambda m: " " * len(m.group(0)), masked)
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    for m in _TOKEN_RE.finditer(masked):
        tokens.append(m.group(0).lower())
        spans.append((m.start(), m.end()))
    return tuple(tokens), tuple(spans)


def tokenize_tweet(tweet: Tweet) -> TokenizedTweet:
    tokens, spans = tokenize(tweet.text)
    return TokenizedTweet(tweet_id=tweet.id, tokens=tokens, char_spans=spans)


def _parse_created_at(value) -> int:
    if isinstance(value, bool):
        raise ValueError("created_at must be a timestamp")
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ValueError("created_at not finite")
        return int(value)
    if isinstance(value, str):
        raw = value.strip()
        if raw.endswith(("Z", "z")):
            raw = raw[:-1] + "+00:00"
        dt = datetime.fromisoformat(raw)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp())
    raise ValueError(f"unparseable created_at: {value!r}")


def parse_record(obj: dict) -> Tweet:
    """Build a Tweet from one decoded record, validating invariants."""
    tweet_id = str(obj["id"])
    if not tweet_id:
        raise ValueError("empty tweet id")
    reply_to = obj.get("reply_to")
    if reply_to is not None:
        reply_to = str(reply_to)
        if reply_to == tweet_id:
            raise ValueError("tweet replies to itself")
    return Tweet(
        id=tweet_id,
        author_id=str(obj["author_id"]),
        created_at=_parse_created_at(obj["created_at"]),
        text=str(obj["text"]),
        reply_to=reply_to,
        is_retweet=bool(obj.get("is_retweet", False)),
    )


@dataclass
class Corpus:
    """Immutable-after-finalize store of tweets with timeline/reply indices."""

    tweets: dict[str, Tweet] = field(default_factory=dict)
    author_timeline: dict[str, list[str]] = field(default_factory=dict)
    reply_index: dict[str, list[str]] = field(default_factory=dict)
    skipped_records: int = 0
    duplicate_ids: int = 0

    def __len__(self) -> int:
        return len(self.tweets)

    def __contains__(self, tweet_id: str) -> bool:
        return tweet_id in self.tweets

    def get(self, tweet_id: str) -> Tweet:
        return self.tweets[tweet_id]

    def target_ids(self) -> list[str]:
        """Ids of valid classification targets: original tweets only.

        Retweets and replies stay in the corpus for context/reply lookup but
        are never themselves classified.
        """
        return sorted(t.id for t in self.tweets.values()
                      if not t.is_retweet and t.reply_to is None)

    def replies_to(self, tweet_id: str) -> list[Tweet]:
        return [self.tweets[i] for i in self.reply_index.get(tweet_id, [])]


def _finalize(tweets: dict[str, Tweet]) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
    timeline: dict[str, list[str]] = {}
    replies: dict[str, list[str]] = {}
    order = sorted(tweets.values(), key=lambda t: (t.created_at, t.id))
    for t in order:
        timeline.setdefault(t.author_id, []).append(t.id)
        if t.reply_to is not None and t.reply_to in tweets:
            replies.setdefault(t.reply_to, []).append(t.id)
    return timeline, replies


def from_tweets(tweets: Iterable[Tweet]) -> Corpus:
    """Build a corpus directly from Tweet objects (first id wins)."""
    store: dict[str, Tweet] = {}
    dupes = 0
    for t in tweets:
        if t.id in store:
            dupes += 1
            continue
        store[t.id] = t
    if not store:
        raise ValueError("empty corpus")
    timeline, replies = _finalize(store)
    return Corpus(tweets=store, author_timeline=timeline, reply_index=replies,
                  duplicate_ids=dupes)


def ingest(lines: Iterable[str]) -> Corpus:
    """Ingest a line-delimited record stream into a finalized Corpus.

    Malformed lines are skipped and counted; duplicate ids keep the first
    occurrence. An empty result is a hard error.
    """
    store: dict[str, Tweet] = {}
    skipped = 0
    dupes = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            tweet = parse_record(obj)
        except (ValueError, KeyError, TypeError) as exc:
            skipped += 1
            logger.warning("skipping malformed record at line %d: %s", lineno, exc)
            continue
        if tweet.id in store:
            dupes += 1
            continue
        store[tweet.id] = tweet
    if not store:
        raise ValueError("empty corpus")
    if dupes:
        logger.warning("collapsed %d duplicate tweet ids (first occurrence wins)", dupes)
    timeline, replies = _finalize(store)
    return Corpus(tweets=store, author_timeline=timeline, reply_index=replies,
                  skipped_records=skipped, duplicate_ids=dupes)


def ingest_path(path: str | Path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        return ingest(fh)


def preceding_tweets(corpus: Corpus, tweet: Tweet, n: int = 5) -> list[tuple[Tweet, int]]:
    """Up to ``n`` same-author tweets strictly before ``tweet``, nearest first.

    Each is paired with its minute distance floor((t_target - t_ctx) / 60),
    so a context tweet inside the same minute gets distance 0.
    """
    timeline = corpus.author_timeline.get(tweet.author_id, [])
    earlier = [corpus.tweets[i] for i in timeline
               if corpus.tweets[i].created_at < tweet.created_at and i != tweet.id]
    earlier.sort(key=lambda t: (-t.created_at, t.id))
    out = []
    for prior in earlier[:n]:
        minutes = (tweet.created_at - prior.created_at) // 60
        out.append((prior, int(minutes)))
    return out


def _tweet_to_record(t: Tweet) -> dict:
    rec = {"id": t.id, "author_id": t.author_id, "created_at": t.created_at,
           "text": t.text}
    if t.reply_to is not None:
        rec["reply_to"] = t.reply_to
    if t.is_retweet:
        rec["is_retweet"] = True
    return rec


def save_snapshot(corpus: Corpus, path: str | Path) -> None:
    """Write a versioned line-delimited snapshot; round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": SNAPSHOT_FORMAT, "version": SNAPSHOT_VERSION,
                  "count": len(corpus.tweets)}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for tweet_id in sorted(corpus.tweets):
            rec = _tweet_to_record(corpus.tweets[tweet_id])
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def load_snapshot(path: str | Path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"not a corpus snapshot: {path}")
        if header.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported corpus snapshot version: {header.get('version')}")
        tweets = [parse_record(json.loads(line)) for line in fh if line.strip()]
    return from_tweets(tweets)
