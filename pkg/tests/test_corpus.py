import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stormwatch.corpus import (
    from_tweets,
    ingest,
    load_snapshot,
    preceding_tweets,
    save_snapshot,
    tokenize,
)

from conftest import corpus_of, make_tweet, record_line


class TestTokenize:
    # Golden rules pinned before the build: lowercase, strip URLs/mentions,
    # unhash hashtags, split on whitespace/punctuation, keep inner hyphens.
    CASES = [
        ("Need RESCUE at #Houston http://t.co/x @fema",
         ["need", "rescue", "at", "houston"]),
        ("", []),
        ("I-10 closed!!", ["i-10", "closed"]),
        ("FLOODING on Main St., please AVOID", ["flooding", "on", "main", "st", "please", "avoid"]),
        ("water@!!", ["water"]),
        ("#evacuate NOW!!! www.example.com/a", ["evacuate", "now"]),
        ("   ", []),
        ("one  two\tthree\nfour", ["one", "two", "three", "four"]),
    ]

    @pytest.mark.parametrize("text,expected", CASES)
    def test_golden(self, text, expected):
        tokens, _ = tokenize(text)
        assert list(tokens) == expected

    def test_spans_index_source_text(self):
        text = "Need RESCUE at #Houston"
        tokens, spans = tokenize(text)
        assert [text[a:b].lower() for a, b in spans] == list(tokens)

    def test_spans_increasing_non_overlapping(self):
        _, spans = tokenize("a bb ccc dddd")
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            assert s1 < e1 <= s2 < e2

    @given(st.text(max_size=80))
    @settings(max_examples=200)
    def test_deterministic_and_nonempty_tokens(self, text):
        t1, s1 = tokenize(text)
        t2, s2 = tokenize(text)
        assert t1 == t2 and s1 == s2
        assert all(tok for tok in t1)
        assert len(t1) == len(s1)


class TestIngest:
    def test_three_valid_lines(self):
        lines = [record_line(id="a", author_id="u1"),
                 record_line(id="b", author_id="u2"),
                 record_line(id="c", author_id="u3")]
        corpus = ingest(lines)
        assert len(corpus) == 3
        assert sorted(corpus.author_timeline) == ["u1", "u2", "u3"]
        assert all(len(v) == 1 for v in corpus.author_timeline.values())

    def test_reply_to_absent_parent_dropped_from_index(self):
        corpus = ingest([record_line(id="a", reply_to="ghost")])
        assert "a" in corpus
        assert corpus.reply_index == {}

    def test_reply_index_built_when_parent_present(self):
        lines = [record_line(id="child", reply_to="parent", created_at=2000),
                 record_line(id="parent", created_at=1000)]
        corpus = ingest(lines)
        assert corpus.reply_index == {"parent": ["child"]}

    def test_empty_stream_is_hard_error(self):
        with pytest.raises(ValueError, match="empty corpus"):
            ingest([])

    def test_malformed_lines_skipped_and_counted(self):
        lines = ["not json", record_line(id="ok"), json.dumps({"id": "x"})]
        corpus = ingest(lines)
        assert len(corpus) == 1
        assert corpus.skipped_records == 2

    def test_duplicate_id_first_wins(self):
        lines = [record_line(id="a", text="first"), record_line(id="a", text="second")]
        corpus = ingest(lines)
        assert corpus.get("a").text == "first"
        assert corpus.duplicate_ids == 1

    def test_self_reply_rejected(self):
        corpus = ingest([record_line(id="a", reply_to="a"), record_line(id="b")])
        assert "a" not in corpus
        assert corpus.skipped_records == 1

    def test_rfc3339_created_at(self):
        corpus = ingest([record_line(id="a", created_at="2017-08-28T00:00:00Z")])
        assert corpus.get("a").created_at == 1503878400

    def test_ingest_idempotence_snapshot_bytes(self, tmp_path):
        lines = [record_line(id="b", created_at=5), record_line(id="a", created_at=9),
                 record_line(id="c", author_id="u9", text="x é")]
        p1, p2 = tmp_path / "s1", tmp_path / "s2"
        save_snapshot(ingest(lines), p1)
        save_snapshot(ingest(lines), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_snapshot_round_trip_exact(self, tmp_path):
        lines = [record_line(id="a", created_at=5, text="Hello #There"),
                 record_line(id="b", reply_to="a", created_at=9),
                 record_line(id="c", is_retweet=True)]
        corpus = ingest(lines)
        p1 = tmp_path / "s1"
        save_snapshot(corpus, p1)
        reloaded = load_snapshot(p1)
        p2 = tmp_path / "s2"
        save_snapshot(reloaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert reloaded.tweets == corpus.tweets


class TestTimelines:
    def test_preceding_single_prior_90s(self):
        a = make_tweet("a", created_at=1000)
        b = make_tweet("b", created_at=1090)
        corpus = corpus_of(a, b)
        assert preceding_tweets(corpus, b, n=5) == [(a, 1)]

    def test_first_tweet_has_no_context(self):
        a = make_tweet("a", created_at=1000)
        corpus = corpus_of(a)
        assert preceding_tweets(corpus, a, n=5) == []

    def test_seven_priors_truncated_to_five_nearest(self):
        tweets = [make_tweet(f"t{i}", created_at=1000 + 60 * i) for i in range(8)]
        corpus = corpus_of(*tweets)
        out = preceding_tweets(corpus, tweets[-1], n=5)
        assert [t.id for t, _ in out] == ["t6", "t5", "t4", "t3", "t2"]
        assert [m for _, m in out] == [1, 2, 3, 4, 5]

    def test_same_minute_distance_zero(self):
        a = make_tweet("a", created_at=1000)
        b = make_tweet("b", created_at=1059)
        corpus = corpus_of(a, b)
        assert preceding_tweets(corpus, b)[0][1] == 0

    def test_other_authors_excluded(self):
        a = make_tweet("a", author="u1", created_at=1000)
        b = make_tweet("b", author="u2", created_at=1100)
        corpus = corpus_of(a, b)
        assert preceding_tweets(corpus, b) == []

    def test_equal_timestamp_not_preceding(self):
        a = make_tweet("a", created_at=1000)
        b = make_tweet("b", created_at=1000)
        corpus = corpus_of(a, b)
        assert preceding_tweets(corpus, b) == []

    @given(st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=20))
    @settings(max_examples=100)
    def test_timeline_sorted_and_contexts_strictly_earlier(self, stamps):
        tweets = [make_tweet(f"t{i:02d}", created_at=ts) for i, ts in enumerate(stamps)]
        corpus = from_tweets(tweets)
        timeline = corpus.author_timeline["u1"]
        times = [corpus.get(t).created_at for t in timeline]
        assert times == sorted(times)
        target = tweets[-1]
        for prior, minutes in preceding_tweets(corpus, target, n=5):
            assert prior.created_at < target.created_at
            assert minutes == (target.created_at - prior.created_at) // 60

    def test_targets_exclude_retweets_and_replies(self):
        a = make_tweet("a")
        b = make_tweet("b", is_retweet=True, created_at=1500)
        c = make_tweet("c", reply_to="a", created_at=2000)
        corpus = corpus_of(a, b, c)
        assert corpus.target_ids() == ["a"]
