import numpy as np
import pytest

from stormwatch.classifier import (
    ChannelBundle,
    LabeledExample,
    TrainConfig,
    bundle,
    class_weights,
    forward,
    gather_replies,
    init_checkpoint,
    load_checkpoint,
    loss_and_grads,
    predict,
    sample_negatives,
    save_checkpoint,
    train,
)
from stormwatch.corpus import from_tweets
from stormwatch.embeddings import seeded_embeddings
from stormwatch.ontology import EventCategory

from conftest import corpus_of, make_tweet
from gradcheck import max_relative_error, numerical_grad

CAS = EventCategory.CAS
RES = EventCategory.RES
OTHER = EventCategory.OTHER


def table_for(corpus, dim=6, seed=5):
    vocab = set()
    for t in corpus.tweets.values():
        vocab.update(t.text.lower().split())
    return seeded_embeddings(vocab, dim=dim, seed=seed)


def small_config(**kwargs):
    defaults = dict(hidden_dim=4, epochs=2, learning_rate=1e-3, batch_size=4, seed=3)
    defaults.update(kwargs)
    return TrainConfig(**defaults)


class TestLabeledExample:
    def test_rejects_empty_labels(self):
        with pytest.raises(ValueError):
            LabeledExample(tweet_id="t", labels=frozenset())

    def test_rejects_other_with_event(self):
        with pytest.raises(ValueError):
            LabeledExample(tweet_id="t", labels=frozenset({OTHER, CAS}))


class TestGatherReplies:
    def test_no_replies(self):
        corpus = corpus_of(make_tweet("a"))
        assert gather_replies(corpus, corpus.get("a")) == []

    def test_rank_by_overlap_then_time(self):
        target = make_tweet("t", text="alpha beta gamma delta", created_at=1000)
        overlaps = [3, 3, 2, 1, 0, 0, 0]
        words = ["alpha", "beta", "gamma", "delta"]
        replies = []
        for i, k in enumerate(overlaps):
            text = " ".join(words[:k] + [f"noise{i} extra{i}"])
            replies.append(make_tweet(f"r{i}", text=text, created_at=2000 + i,
                                      reply_to="t"))
        corpus = corpus_of(target, *replies)
        out = gather_replies(corpus, corpus.get("t"), limit=5)
        assert len(out) == 5
        assert out[0][:3] == ("alpha", "beta", "gamma")
        assert out[1][:3] == ("alpha", "beta", "gamma")
        # ties broken by earlier created_at: r0 before r1, and r4 is the
        # earliest zero-overlap reply
        assert "noise0" in out[0]
        assert "noise4" in out[4]

    def test_identical_reply_ranked_first(self):
        target = make_tweet("t", text="flood water rising", created_at=1000)
        twin = make_tweet("r1", text="flood water rising", created_at=3000, reply_to="t")
        other = make_tweet("r2", text="something else entirely here", created_at=2000,
                           reply_to="t")
        corpus = corpus_of(target, twin, other)
        out = gather_replies(corpus, corpus.get("t"))
        assert out[0] == ("flood", "water", "rising")


class TestBundle:
    def test_context_weights(self):
        target = make_tweet("t", created_at=1000, text="now")
        c1 = make_tweet("c1", created_at=970, text="recent words")
        c2 = make_tweet("c2", created_at=850, text="older words")
        corpus = corpus_of(target, c1, c2)
        b = bundle(corpus, corpus.get("t"))
        assert [w for _, w in b.contexts] == pytest.approx([1.0, 0.8 ** 2])

    def test_isolated_tweet(self):
        corpus = corpus_of(make_tweet("t", text="alone here"))
        b = bundle(corpus, corpus.get("t"))
        assert b.contexts == () and b.replies == ()

    def test_ten_minute_decay(self):
        target = make_tweet("t", created_at=1000, text="now")
        ctx = make_tweet("c", created_at=1000 - 600, text="way back")
        corpus = corpus_of(target, ctx)
        b = bundle(corpus, corpus.get("t"))
        assert b.contexts[0][1] == pytest.approx(0.8 ** 10, abs=1e-12)

    def test_weight_range_validated(self):
        with pytest.raises(ValueError):
            ChannelBundle(tweet_id="t", target=("x",), contexts=((("y",), 1.5),))


class TestForward:
    def test_equal_context_embeddings_average_to_same(self):
        # All contexts identical: weighted average returns that embedding for
        # any positive weights.
        corpus = corpus_of(make_tweet("t", text="target words here"))
        table = table_for(corpus)
        ckpt = init_checkpoint(table, small_config())
        same = ("context", "tokens")
        b1 = ChannelBundle(tweet_id="t", target=("target", "words"),
                           contexts=((same, 1.0), (same, 0.64), (same, 0.1)))
        b2 = ChannelBundle(tweet_id="t", target=("target", "words"),
                           contexts=((same, 0.3),))
        s1 = forward(ckpt, table, b1)
        s2 = forward(ckpt, table, b2)
        assert np.allclose(s1, s2, atol=1e-12)

    def test_shapes(self):
        corpus = corpus_of(make_tweet("t", text="a b"))
        table = table_for(corpus)
        ckpt = init_checkpoint(table, small_config(hidden_dim=4))
        assert ckpt.out_w.shape == (10, 24)
        scores = forward(ckpt, table, ChannelBundle(tweet_id="t", target=("a", "b")))
        assert scores.shape == (10,)

    def test_zero_output_layer_scores_half(self):
        corpus = corpus_of(make_tweet("t", text="a b"))
        table = table_for(corpus)
        ckpt = init_checkpoint(table, small_config())
        ckpt.out_w[:] = 0.0
        ckpt.out_b[:] = 0.0
        scores = forward(ckpt, table, ChannelBundle(tweet_id="t", target=("a",)))
        assert np.allclose(scores, 0.5)

    def test_empty_target_rejected(self):
        corpus = corpus_of(make_tweet("t", text="a"))
        table = table_for(corpus)
        ckpt = init_checkpoint(table, small_config())
        with pytest.raises(ValueError, match="empty target"):
            forward(ckpt, table, ChannelBundle(tweet_id="t", target=()))

    def test_channel_ablation_reduces_to_target_only(self):
        corpus = corpus_of(make_tweet("t", text="a b c"))
        table = table_for(corpus)
        ckpt = init_checkpoint(table, small_config())
        with_channels = ChannelBundle(
            tweet_id="t", target=("a", "b"),
            contexts=((("c",), 0.8),), replies=(("b", "c"),))
        bare = ChannelBundle(tweet_id="t", target=("a", "b"))
        ablated = forward(ckpt, table, with_channels, use_contexts=False,
                          use_replies=False)
        assert np.array_equal(ablated, forward(ckpt, table, bare))


class TestClassWeights:
    def test_inverse_size_ratio(self):
        examples = (
            [LabeledExample(f"a{i}", frozenset({CAS})) for i in range(100)]
            + [LabeledExample(f"b{i}", frozenset({RES})) for i in range(50)]
        )
        lam = class_weights(examples)
        assert lam[RES.value] / lam[CAS.value] == pytest.approx(2.0)
        assert lam.sum() == pytest.approx(10.0)

    def test_scale_invariance_all_classes_present(self):
        def sized(scale):
            examples = []
            for i, cat in enumerate(EventCategory):
                examples += [LabeledExample(f"{cat.name}{j}", frozenset({cat}))
                             for j in range((i + 1) * scale)]
            return class_weights(examples)

        assert np.allclose(sized(2), sized(6))

    def test_absent_class_smoothed(self):
        examples = [LabeledExample("a", frozenset({CAS})),
                    LabeledExample("b", frozenset({RES}))]
        lam = class_weights(examples)
        assert np.isfinite(lam).all() and lam.min() > 0


class TestSampleNegatives:
    def test_count_matches_positives(self):
        pool = [f"p{i}" for i in range(600)]
        negs = sample_negatives(pool, n=500, seed=1)
        assert len(negs) == 500
        assert all(n.labels == frozenset({OTHER}) for n in negs)
        assert all(n.provenance == "negative_sample" for n in negs)

    def test_small_pool_returns_all(self):
        negs = sample_negatives([f"p{i}" for i in range(10)], n=50, seed=1)
        assert len(negs) == 10

    def test_same_seed_same_sample(self):
        pool = [f"p{i}" for i in range(100)]
        a = sample_negatives(pool, n=10, seed=9)
        b = sample_negatives(pool, n=10, seed=9)
        assert [x.tweet_id for x in a] == [x.tweet_id for x in b]

    def test_excludes_labeled(self):
        pool = ["a", "b", "c"]
        negs = sample_negatives(pool, n=3, seed=0, exclude={"b"})
        assert {n.tweet_id for n in negs} == {"a", "c"}


class TestGradients:
    def test_full_model_matches_finite_differences(self):
        target = make_tweet("t", created_at=1000, text="flood in the bayou")
        ctx = make_tweet("c", created_at=940, text="water rising fast")
        reply = make_tweet("r", created_at=1100, text="stay safe flood", reply_to="t")
        corpus = corpus_of(target, ctx, reply)
        table = table_for(corpus, dim=5)
        ckpt = init_checkpoint(table, small_config(hidden_dim=3, seed=12))
        item = bundle(corpus, corpus.get("t"))
        y = np.zeros(10)
        y[CAS.value] = 1.0
        y[OTHER.value] = 0.0

        _, grads = loss_and_grads(ckpt, table, item, y)

        arrays = {
            "out_w": (ckpt.out_w, grads.out_w),
            "out_b": (ckpt.out_b, grads.out_b),
        }
        for prefix, enc, g in (("t", ckpt.target_encoder, grads.target),
                               ("c", ckpt.context_encoder, grads.context),
                               ("r", ckpt.reply_encoder, grads.reply)):
            for direction in ("fw", "bw"):
                for name in ("W", "U", "b"):
                    arrays[f"{prefix}_{direction}_{name}"] = (
                        getattr(getattr(enc, direction), name),
                        getattr(getattr(g, direction), name))

        loss_fn = lambda: loss_and_grads(ckpt, table, item, y)[0]
        for key, (param, analytic) in arrays.items():
            numeric = numerical_grad(loss_fn, param)
            assert max_relative_error(analytic, numeric) < 1e-4, key


def separable_fixture(n_per_class=16, seed=0):
    tweets = []
    examples = []
    vocabs = {CAS: [f"cas{i}" for i in range(6)], RES: [f"res{i}" for i in range(6)]}
    rng = np.random.default_rng(seed)
    for cat, vocab in vocabs.items():
        for i in range(n_per_class):
            idx = rng.choice(len(vocab), size=4, replace=False)
            text = " ".join(vocab[j] for j in idx)
            tid = f"{cat.name}{i}"
            tweets.append(make_tweet(tid, author=tid, text=text, created_at=1000 + i))
            examples.append(LabeledExample(tweet_id=tid, labels=frozenset({cat})))
    corpus = from_tweets(tweets)
    return corpus, examples


class TestTrain:
    def test_single_class_rejected(self):
        corpus = corpus_of(make_tweet("a", text="x"), make_tweet("b", text="y"))
        examples = [LabeledExample("a", frozenset({CAS})),
                    LabeledExample("b", frozenset({CAS}))]
        with pytest.raises(ValueError, match="2 distinct classes"):
            train(examples, corpus, table_for(corpus), small_config())

    def test_empty_set_rejected(self):
        corpus = corpus_of(make_tweet("a", text="x"))
        with pytest.raises(ValueError, match="empty"):
            train([], corpus, table_for(corpus), small_config())

    def test_zero_epochs_equals_seeded_init(self):
        corpus, examples = separable_fixture(n_per_class=4)
        table = table_for(corpus)
        config = small_config(epochs=0, seed=77)
        ckpt = train(examples, corpus, table, config)
        init = init_checkpoint(table, config, examples)
        assert np.array_equal(ckpt.out_w, init.out_w)
        assert np.array_equal(ckpt.target_encoder.fw.W, init.target_encoder.fw.W)
        assert np.array_equal(ckpt.class_weights, init.class_weights)

    def test_separable_data_learns(self):
        corpus, examples = separable_fixture()
        table = table_for(corpus, dim=8)
        config = small_config(hidden_dim=8, epochs=30, learning_rate=0.02,
                              batch_size=4, seed=2)
        ckpt = train(examples, corpus, table, config)
        drops = sum(b < a for a, b in zip(ckpt.epoch_losses, ckpt.epoch_losses[1:]))
        assert drops >= 0.9 * (len(ckpt.epoch_losses) - 1)

        predictions = predict(ckpt, table, corpus, [e.tweet_id for e in examples])
        gold = {e.tweet_id: e.labels for e in examples}
        f1s = []
        for cat in (CAS, RES):
            tp = sum(1 for p in predictions
                     if cat in p.labels and cat in gold[p.tweet_id])
            fp = sum(1 for p in predictions
                     if cat in p.labels and cat not in gold[p.tweet_id])
            fn = sum(1 for p in predictions
                     if cat not in p.labels and cat in gold[p.tweet_id])
            prec = tp / (tp + fp) if tp + fp else 0.0
            rec = tp / (tp + fn) if tp + fn else 0.0
            f1s.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
        assert np.mean(f1s) >= 0.95

    def test_training_deterministic(self):
        corpus, examples = separable_fixture(n_per_class=6)
        table = table_for(corpus)
        config = small_config(epochs=3, seed=5)
        c1 = train(examples, corpus, table, config)
        c2 = train(examples, corpus, table, config)
        assert np.array_equal(c1.out_w, c2.out_w)
        assert c1.epoch_losses == c2.epoch_losses


class TestPredict:
    def test_threshold_rule_and_other_fallback(self):
        corpus = corpus_of(make_tweet("t", text="a b"))
        table = table_for(corpus)
        ckpt = init_checkpoint(table, small_config())
        ckpt.out_w[:] = 0.0
        ckpt.out_b[:] = -10.0
        ckpt.out_b[CAS.value] = 10.0
        ckpt.out_b[RES.value] = 10.0
        preds = predict(ckpt, table, corpus, ["t"])
        assert preds[0].labels == frozenset({CAS, RES})

        ckpt.out_b[:] = -10.0
        preds = predict(ckpt, table, corpus, ["t"])
        assert preds[0].labels == frozenset({OTHER})

    def test_empty_text_predicts_other(self):
        corpus = corpus_of(make_tweet("t", text="http://only.a/url"))
        table = table_for(corpus)
        ckpt = init_checkpoint(table, small_config())
        preds = predict(ckpt, table, corpus, ["t"])
        assert preds[0].labels == frozenset({OTHER})
        assert preds[0].scores == (0.0,) * 10

    def test_deterministic(self):
        corpus, examples = separable_fixture(n_per_class=3)
        table = table_for(corpus)
        ckpt = init_checkpoint(table, small_config())
        ids = [e.tweet_id for e in examples]
        assert predict(ckpt, table, corpus, ids) == predict(ckpt, table, corpus, ids)


class TestCheckpointIO:
    def test_round_trip_exact(self, tmp_path):
        corpus, examples = separable_fixture(n_per_class=3)
        table = table_for(corpus)
        config = small_config(epochs=1)
        ckpt = train(examples, corpus, table, config)
        path = tmp_path / "model.npz"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        assert np.array_equal(loaded.out_w, ckpt.out_w)
        assert np.array_equal(loaded.class_weights, ckpt.class_weights)
        assert loaded.config == ckpt.config
        assert loaded.epoch_losses == ckpt.epoch_losses
        assert np.array_equal(loaded.reply_encoder.bw.U, ckpt.reply_encoder.bw.U)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.npz"
        np.savez(path, meta=np.frombuffer(b'{"format":"nope"}', dtype=np.uint8))
        with pytest.raises(ValueError):
            load_checkpoint(path)
