from itertools import combinations

from stormwatch.corpus import ingest, tokenize
from stormwatch.ontology import EVENT_CATEGORIES, EventCategory, default_lexicon
from stormwatch.synthetic import GeneratorConfig, generate, two_sense_pool


class TestTwoSensePool:
    def test_disjoint_vocabularies(self):
        pool, truth = two_sense_pool(seed=0)
        a_words = set().union(*(t.selected for t in pool if truth[t.tweet_id] == "a"))
        b_words = set().union(*(t.selected for t in pool if truth[t.tweet_id] == "b"))
        assert not a_words & b_words

    def test_in_sense_overlap_guarantee(self):
        pool, truth = two_sense_pool(seed=1, n_per_sense=10)
        for u, v in combinations(pool, 2):
            if truth[u.tweet_id] == truth[v.tweet_id]:
                assert len(u.selected & v.selected) >= 2

    def test_sizes(self):
        pool, truth = two_sense_pool(seed=2, n_per_sense=7)
        assert len(pool) == 14
        assert sum(1 for s in truth.values() if s == "a") == 7


class TestGenerate:
    def test_corpus_ingestible_and_sized(self):
        ds = generate(seed=5, config=GeneratorConfig(n_background=50))
        corpus = ingest(ds.lines())
        assert len(corpus) == len(ds.records)
        assert corpus.skipped_records == 0

    def test_off_sense_rate(self):
        cfg = GeneratorConfig()
        ds = generate(seed=5, config=cfg)
        lexicon = default_lexicon()
        in_sense = sum(1 for v in ds.truth.values() if v is not None)
        off_sense = sum(1 for v in ds.truth.values() if v is None)
        total = in_sense + off_sense
        assert total == cfg.n_keyword * len(EVENT_CATEGORIES)
        assert abs(off_sense / total - cfg.off_sense_rate) < 0.02

    def test_keyword_tweets_hit_their_category(self):
        ds = generate(seed=3, config=GeneratorConfig(n_background=10))
        corpus = ingest(ds.lines())
        lexicon = default_lexicon()
        for tweet_id, cat in ds.truth.items():
            tokens, _ = tokenize(corpus.get(tweet_id).text)
            hit_cats = {h.category for h in lexicon.match_keywords(tokens)}
            if cat is not None:
                assert cat in hit_cats

    def test_gold_covers_test_ids_only(self):
        ds = generate(seed=4, config=GeneratorConfig(n_background=10))
        assert set(ds.gold) == set(ds.test_ids)
        for labels in ds.gold.values():
            assert labels
            if EventCategory.OTHER in labels:
                assert labels == frozenset({EventCategory.OTHER})

    def test_deterministic(self):
        a = generate(seed=9, config=GeneratorConfig(n_background=20))
        b = generate(seed=9, config=GeneratorConfig(n_background=20))
        assert a.lines() == b.lines()
        assert a.gold == b.gold and a.truth == b.truth
