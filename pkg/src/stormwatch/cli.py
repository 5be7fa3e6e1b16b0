"""Command-line pipeline: every phase as a composable, seeded subcommand.

Each stage reads versioned artifacts from the working directory, writes its
own, and records a manifest (config hash plus input/output file hashes), so
identical configs and inputs always produce identical manifests. A lock file
keeps one pipeline instance per workdir; stages can pause for hours between
invocations (the annotation step usually does).

Exit codes: 0 ok, 1 usage, 2 data error, 3 internal.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bootstrap as boot
from . import classifier as clf
from . import corpus as corpus_mod
from . import encoder as enc
from . import evaluate as ev
from . import graph_cluster as gc
from . import wsd
from .config import PipelineConfig, derive_seed, load_config
from .embeddings import EmbeddingTable, load_embeddings, seeded_embeddings
from .ontology import EventCategory, KeywordLexicon, default_lexicon, load_lexicon

logger = logging.getLogger("stormwatch.cli")


class UsageError(Exception):
    exit_code = 1


class DataError(Exception):
    exit_code = 2


# ---------------------------------------------------------------------------
# Workdir plumbing: artifacts, manifests, lock
# ---------------------------------------------------------------------------

ARTIFACTS = {
    "corpus": "corpus.jsonl",
    "selection_encoder": "selection_encoder.npz",
    "profiles": "profiles.json",
    "graphs": "graphs.json",
    "clusters": "clusters.json",
    "journal": "journal.jsonl",
    "labels": "labels.json",
    "checkpoint": "checkpoint.npz",
    "bootstrap_checkpoint": "bootstrap_checkpoint.npz",
    "rounds": "rounds.json",
    "predictions": "predictions.jsonl",
    "report": "report.json",
    "baseline_keyword": "baseline_keyword.jsonl",
    "baseline_slpa": "baseline_slpa.jsonl",
    "trend": "trend.csv",
}

STAGE_FOR_ARTIFACT = {
    "corpus": "ingest",
    "selection_encoder": "select-words",
    "profiles": "select-words",
    "graphs": "build-graph",
    "clusters": "cluster",
    "journal": "annotate-oracle (or annotate-serve)",
    "labels": "assemble-labels",
    "checkpoint": "train",
    "bootstrap_checkpoint": "bootstrap",
    "predictions": "predict",
}


class Workdir:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.root = Path(config.workdir)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "manifests").mkdir(exist_ok=True)

    def path(self, name: str) -> Path:
        return self.root / ARTIFACTS[name]

    def require(self, name: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise DataError(
                f"missing {ARTIFACTS[name]} artifact; run `stormwatch {STAGE_FOR_ARTIFACT[name]}` first")
        return p

    def write_manifest(self, stage: str, inputs: Sequence[Path], outputs: Sequence[Path]) -> None:
        def digest(p: Path) -> str:
            return hashlib.sha256(p.read_bytes()).hexdigest()

        doc = {
            "stage": stage,
            "config_hash": self.config.config_hash(),
            "inputs": {p.name: digest(p) for p in inputs},
            "outputs": {p.name: digest(p) for p in outputs},
        }
        with open(self.root / "manifests" / f"{stage}.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)


class WorkdirLock:
    def __init__(self, root: Path):
        self.path = root / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise DataError(f"workdir locked by another pipeline instance: {self.path}")
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


# ---------------------------------------------------------------------------
# Shared loading helpers
# ---------------------------------------------------------------------------

def _load_lexicon(config: PipelineConfig) -> KeywordLexicon:
    return load_lexicon(config.lexicon_path) if config.lexicon_path else default_lexicon()


def _load_corpus(work: Workdir) -> corpus_mod.Corpus:
    return corpus_mod.load_snapshot(work.require("corpus"))


def _corpus_vocab(corpus: corpus_mod.Corpus) -> set[str]:
    vocab: set[str] = set()
    for tweet in corpus.tweets.values():
        tokens, _ = corpus_mod.tokenize(tweet.text)
        vocab.update(tokens)
    return vocab


def _load_table(config: PipelineConfig, corpus: corpus_mod.Corpus) -> EmbeddingTable:
    if config.embeddings_path:
        table = load_embeddings(config.embeddings_path)
        if table.dim != config.embedding_dim:
            logger.warning("embedding file dim %d overrides config %d",
                           table.dim, config.embedding_dim)
        return table
    return seeded_embeddings(_corpus_vocab(corpus), config.embedding_dim,
                             derive_seed(config.seed, "embeddings"))


def _holdout_ids(config: PipelineConfig) -> set[str]:
    if not config.holdout_path:
        return set()
    ids = set()
    with open(config.holdout_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                ids.add(json.loads(line)["tweet_id"])
    return ids


def _load_profiles(work: Workdir) -> tuple[dict[str, list[str]], dict[str, gc.ProfiledTweet]]:
    with open(work.require("profiles"), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "stormwatch-profiles":
        raise DataError("profiles artifact is not in the expected format")
    profiles = {
        tid: gc.ProfiledTweet(tweet_id=tid, tokens=tuple(p["tokens"]),
                              selected=frozenset(p["selected"]))
        for tid, p in doc["profiles"].items()
    }
    return doc["pools"], profiles


def _pool_category(pool_key: str) -> EventCategory:
    return EventCategory[pool_key.split(":")[0]]


def _load_cluster_pools(work: Workdir) -> dict[str, list[gc.Cluster]]:
    with open(work.require("clusters"), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "stormwatch-cluster-pools":
        raise DataError("clusters artifact is not in the expected format")
    out: dict[str, list[gc.Cluster]] = {}
    for key, items in doc["pools"].items():
        out[key] = [gc.Cluster(id=c["id"], members=tuple(c["members"]),
                               top_words=tuple(c["top_words"])) for c in items]
    return out


def _clusters_by_category(pools: dict[str, list[gc.Cluster]]) -> dict[EventCategory, list[gc.Cluster]]:
    merged: dict[EventCategory, list[gc.Cluster]] = {}
    for key, clusters in pools.items():
        merged.setdefault(_pool_category(key), []).extend(clusters)
    return {cat: gc.rank_clusters(cs) for cat, cs in merged.items()}


def _load_labels(work: Workdir) -> list[clf.LabeledExample]:
    with open(work.require("labels"), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return [clf.LabeledExample(tweet_id=e["tweet_id"],
                               labels=frozenset(EventCategory[l] for l in e["labels"]),
                               provenance=e.get("provenance", "seed"))
            for e in doc["examples"]]


def _train_config(config: PipelineConfig) -> clf.TrainConfig:
    return clf.TrainConfig(
        hidden_dim=config.hidden_dim,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        seed=derive_seed(config.seed, "train"),
        use_contexts=config.use_contexts,
        use_replies=config.use_replies,
        decision_threshold=config.decision_threshold,
    )


def _write_predictions(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _read_predictions(path: Path) -> dict[str, set[EventCategory]]:
    out: dict[str, set[EventCategory]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            out[row["tweet_id"]] = {EventCategory[l] for l in row["labels"]}
    return out


def _read_gold(path: str | Path) -> dict[str, set[EventCategory]]:
    gold: dict[str, set[EventCategory]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                gold[row["tweet_id"]] = {EventCategory[l] for l in row["labels"]}
    return gold


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_ingest(config: PipelineConfig, work: Workdir) -> None:
    if not config.corpus_path:
        raise UsageError("config must set corpus_path for ingest")
    src = Path(config.corpus_path)
    if not src.exists():
        raise DataError(f"corpus file not found: {src}")
    try:
        corpus = corpus_mod.ingest_path(src)
    except ValueError as exc:
        raise DataError(str(exc))
    out = work.path("corpus")
    corpus_mod.save_snapshot(corpus, out)
    logger.info("ingested %d tweets (%d skipped, %d duplicates)",
                len(corpus), corpus.skipped_records, corpus.duplicate_ids)
    work.write_manifest("ingest", [src], [out])


def stage_select_words(config: PipelineConfig, work: Workdir) -> None:
    corpus = _load_corpus(work)
    lexicon = _load_lexicon(config)
    table = _load_table(config, corpus)
    if config.selection_encoder_path:
        params = enc.load_encoder(config.selection_encoder_path)
        if params.input_dim != table.dim:
            raise DataError("selection encoder input dim does not match embeddings")
    else:
        rng = np.random.default_rng(derive_seed(config.seed, "selection-encoder"))
        params = enc.init_encoder("selection", table.dim, config.hidden_dim, rng)
    enc.save_encoder(params, work.path("selection_encoder"))

    holdout = _holdout_ids(config)
    pools: dict[str, list[str]] = {}
    profiles: dict[str, dict] = {}
    for tweet_id in corpus.target_ids():
        if tweet_id in holdout:
            continue
        tokens, _ = corpus_mod.tokenize(corpus.get(tweet_id).text)
        hits = lexicon.match_keywords(tokens)
        if not hits:
            continue
        profile = enc.profile_tokens(params, table, tweet_id, tokens)
        profiles[tweet_id] = {
            "tokens": list(tokens),
            "scores": list(profile.scores),
            "selected": sorted(profile.selected),
        }
        keys = ({f"{h.category.name}:{h.lemma}" for h in hits}
                if config.pool_by == "keyword" else {h.category.name for h in hits})
        for key in sorted(keys):
            pools.setdefault(key, []).append(tweet_id)
    doc = {
        "format": "stormwatch-profiles", "version": 1,
        "pools": {k: sorted(v) for k, v in sorted(pools.items())},
        "profiles": {k: profiles[k] for k in sorted(profiles)},
    }
    out = work.path("profiles")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
    logger.info("profiled %d keyword tweets across %d pools", len(profiles), len(pools))
    work.write_manifest("select-words", [work.path("corpus")],
                        [work.path("selection_encoder"), out])


def stage_build_graph(config: PipelineConfig, work: Workdir) -> None:
    pools, profiles = _load_profiles(work)
    graphs = {}
    for key in sorted(pools):
        pool = [profiles[tid] for tid in pools[key]]
        graph = gc.build_graph(pool)
        graphs[key] = {
            "nodes": list(graph.nodes),
            "edges": [[a, b, w] for (a, b), w in sorted(graph.edges.items())],
        }
        logger.info("pool %s: %d nodes, %d edges", key, len(graph.nodes), len(graph.edges))
    out = work.path("graphs")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({"format": "stormwatch-graph-pools", "version": 1, "pools": graphs},
                  fh, sort_keys=True)
    work.write_manifest("build-graph", [work.path("profiles")], [out])


def stage_cluster(config: PipelineConfig, work: Workdir) -> None:
    with open(work.require("graphs"), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "stormwatch-graph-pools":
        raise DataError("graphs artifact is not in the expected format")
    _, profiles = _load_profiles(work)
    selected_words = {tid: p.selected for tid, p in profiles.items()}
    out_pools = {}
    for key in sorted(doc["pools"]):
        g = doc["pools"][key]
        graph = gc.TweetGraph(nodes=tuple(g["nodes"]),
                              edges={(a, b): w for a, b, w in g["edges"]})
        clusters = gc.slpa_cluster(
            graph,
            iterations=config.slpa_iterations,
            r=config.slpa_threshold,
            seed=derive_seed(config.seed, "slpa", key),
            id_prefix=f"{key}/",
            selected_words=selected_words,
        )
        out_pools[key] = [{"id": c.id, "members": list(c.members),
                           "top_words": list(c.top_words)} for c in clusters]
        logger.info("pool %s: %d clusters", key, len(clusters))
    out = work.path("clusters")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({"format": "stormwatch-cluster-pools", "version": 1,
                   "pools": out_pools}, fh, sort_keys=True)
    work.write_manifest("cluster", [work.path("graphs"), work.path("profiles")], [out])


def _make_session(config: PipelineConfig, work: Workdir,
                  deterministic_clock: bool) -> wsd.AnnotationSession:
    cluster_pools = _load_cluster_pools(work)
    clock = wsd.sequence_clock() if deterministic_clock else None
    return wsd.AnnotationSession(
        _clusters_by_category(cluster_pools),
        seed=derive_seed(config.seed, "annotation"),
        pertinent_target=config.pertinent_target,
        journal_path=work.path("journal"),
        clock=clock,
        allow_supersede=config.annotation_allow_supersede,
    )


def stage_annotate_serve(config: PipelineConfig, work: Workdir, host: str, port: int) -> None:
    import uvicorn

    from .wsd_api import create_app

    session = _make_session(config, work, deterministic_clock=False)
    corpus = _load_corpus(work)
    pools, _ = _load_profiles(work)
    category_pools: dict[EventCategory, set[str]] = {}
    for key, ids in pools.items():
        category_pools.setdefault(_pool_category(key), set()).update(ids)
    app = create_app(session, corpus, _load_lexicon(config), pools=category_pools)
    logger.info("annotation console API at http://%s:%d", host, port)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def stage_annotate_oracle(config: PipelineConfig, work: Workdir, truth_path: str) -> None:
    truth_file = Path(truth_path)
    if not truth_file.exists():
        raise DataError(f"truth file not found: {truth_file}")
    journal = work.path("journal")
    if journal.exists():
        journal.unlink()
    session = _make_session(config, work, deterministic_clock=True)
    with open(truth_file, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    truth = {k: (EventCategory[v] if v else None) for k, v in raw.items()}
    made = wsd.oracle_annotate(session, truth)
    logger.info("oracle recorded %d decisions", made)
    work.write_manifest("annotate-oracle",
                        [work.path("clusters"), truth_file], [journal])


def stage_assemble_labels(config: PipelineConfig, work: Workdir) -> None:
    cluster_pools = _load_cluster_pools(work)
    pools, _ = _load_profiles(work)
    journal_path = work.require("journal")
    decisions = []
    with open(journal_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                decisions.append(wsd.ClusterDecision.from_record(json.loads(line)))
    category_pools: dict[EventCategory, set[str]] = {}
    for key, ids in pools.items():
        category_pools.setdefault(_pool_category(key), set()).update(ids)
    examples, report = wsd.assemble_labeled_set(
        decisions, _clusters_by_category(cluster_pools), category_pools)
    out = work.path("labels")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({
            "format": "stormwatch-labels", "version": 1,
            "examples": [{"tweet_id": e.tweet_id,
                          "labels": sorted(l.name for l in e.labels),
                          "provenance": e.provenance} for e in examples],
            "report": report.to_dict(),
        }, fh, sort_keys=True)
    kept = sum(1 for e in examples)
    logger.info("assembled %d labeled examples", kept)
    work.write_manifest("assemble-labels",
                        [journal_path, work.path("clusters"), work.path("profiles")],
                        [out])


def _unlabeled_pool(corpus: corpus_mod.Corpus, labeled: set[str],
                    holdout: set[str]) -> list[str]:
    return [t for t in corpus.target_ids() if t not in labeled and t not in holdout]


def stage_train(config: PipelineConfig, work: Workdir) -> None:
    corpus = _load_corpus(work)
    table = _load_table(config, corpus)
    examples = _load_labels(work)
    if not examples:
        raise DataError("assembled labeled set is empty")
    holdout = _holdout_ids(config)
    positives = [e for e in examples if EventCategory.OTHER not in e.labels]
    pool = _unlabeled_pool(corpus, {e.tweet_id for e in examples}, holdout)
    negatives = clf.sample_negatives(pool, n=len(positives),
                                     seed=derive_seed(config.seed, "negatives", "seed-train"))
    try:
        checkpoint = clf.train(examples + negatives, corpus, table, _train_config(config))
    except (ValueError, FloatingPointError) as exc:
        raise DataError(f"training failed: {exc}")
    out = work.path("checkpoint")
    clf.save_checkpoint(checkpoint, out)
    work.write_manifest("train", [work.path("corpus"), work.path("labels")], [out])


def stage_bootstrap(config: PipelineConfig, work: Workdir) -> None:
    corpus = _load_corpus(work)
    table = _load_table(config, corpus)
    examples = _load_labels(work)
    holdout = _holdout_ids(config)
    pool = _unlabeled_pool(corpus, {e.tweet_id for e in examples}, holdout)
    boot_config = boot.BootstrapConfig(
        start_threshold=config.bootstrap_start,
        step=config.bootstrap_step,
        floor=config.bootstrap_floor,
        min_selected=config.bootstrap_min_selected,
        dropout_rate=config.dropout_rate,
    )
    try:
        checkpoint, state = boot.bootstrap_run(
            examples, pool, corpus, table, _load_lexicon(config),
            _train_config(config), boot_config)
    except RuntimeError as exc:
        raise DataError(str(exc))
    clf.save_checkpoint(checkpoint, work.path("bootstrap_checkpoint"))
    boot.save_rounds(state, work.path("rounds"))
    logger.info("bootstrap finished after %d rounds, %d tweets adopted",
                state.round_index, state.cumulative_added)
    work.write_manifest("bootstrap", [work.path("corpus"), work.path("labels")],
                        [work.path("bootstrap_checkpoint"), work.path("rounds")])


def _prediction_targets(config: PipelineConfig, corpus: corpus_mod.Corpus) -> list[str]:
    holdout = sorted(_holdout_ids(config))
    return holdout if holdout else corpus.target_ids()


def stage_predict(config: PipelineConfig, work: Workdir, model: str) -> None:
    corpus = _load_corpus(work)
    table = _load_table(config, corpus)
    artifact = "bootstrap_checkpoint" if model == "bootstrap" else "checkpoint"
    checkpoint = clf.load_checkpoint(work.require(artifact))
    targets = _prediction_targets(config, corpus)
    predictions = clf.predict(checkpoint, table, corpus, targets,
                              threshold=config.decision_threshold)
    rows = [{"tweet_id": p.tweet_id, "scores": list(p.scores),
             "labels": sorted(l.name for l in p.labels)} for p in predictions]
    out = work.path("predictions")
    _write_predictions(out, rows)
    work.write_manifest("predict", [work.path(artifact), work.path("corpus")], [out])


def stage_evaluate(config: PipelineConfig, work: Workdir, gold_path: str,
                   predictions_name: str = "predictions") -> None:
    gold_file = Path(gold_path)
    if not gold_file.exists():
        raise DataError(f"gold file not found: {gold_file}")
    pred_path = work.require(predictions_name)
    predictions = _read_predictions(pred_path)
    gold = _read_gold(gold_file)
    try:
        report = ev.evaluate(predictions, gold)
    except ValueError as exc:
        raise DataError(str(exc))
    out = work.path("report")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
    print(report.table())
    work.write_manifest("evaluate", [pred_path, gold_file], [out])


def stage_baseline(config: PipelineConfig, work: Workdir, which: str) -> None:
    corpus = _load_corpus(work)
    lexicon = _load_lexicon(config)
    targets = _prediction_targets(config, corpus)
    rows = []
    if which == "keyword":
        for tweet_id in targets:
            tokens, _ = corpus_mod.tokenize(corpus.get(tweet_id).text)
            labels = lexicon.keyword_baseline_predict(tokens)
            rows.append({"tweet_id": tweet_id, "scores": None,
                         "labels": sorted(l.name for l in labels)})
        out = work.path("baseline_keyword")
        inputs = [work.path("corpus")]
    else:
        cluster_pools = _load_cluster_pools(work)
        _, profiles = _load_profiles(work)
        all_clusters = [c for cs in cluster_pools.values() for c in cs]
        cluster_cats = ev.label_clusters_by_keywords(all_clusters, lexicon)
        tweet_labels: dict[str, set[EventCategory]] = {}
        for c in all_clusters:
            cats = cluster_cats[c.id]
            if not cats:
                continue
            for m in c.members:
                tweet_labels.setdefault(m, set()).update(cats)
        frozen = {tid: frozenset(cats) for tid, cats in tweet_labels.items()}
        pool = list(profiles.values())
        params = enc.load_encoder(work.require("selection_encoder"))
        table = _load_table(config, corpus)
        for tweet_id in targets:
            profile = profiles.get(tweet_id)
            if profile is None:
                tokens, _ = corpus_mod.tokenize(corpus.get(tweet_id).text)
                p = enc.profile_tokens(params, table, tweet_id, tokens)
                profile = gc.ProfiledTweet(tweet_id=tweet_id, tokens=tuple(tokens),
                                           selected=p.selected)
            labels = ev.slpa_baseline_predict(profile, pool, frozen)
            rows.append({"tweet_id": tweet_id, "scores": None,
                         "labels": sorted(l.name for l in labels)})
        out = work.path("baseline_slpa")
        inputs = [work.path("corpus"), work.path("clusters"), work.path("profiles")]
    _write_predictions(out, rows)
    work.write_manifest(f"baseline-{which}", inputs, [out])


def stage_trend(config: PipelineConfig, work: Workdir) -> None:
    corpus = _load_corpus(work)
    predictions = _read_predictions(work.require("predictions"))
    items = [(labels, corpus.get(tid).created_at) for tid, labels in predictions.items()]
    counts = ev.trend_counts(items)
    out = work.path("trend")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket_start_utc", "category", "count"])
        for bucket, cat, n in ev.trend_table(counts):
            iso = datetime.fromtimestamp(bucket, tz=timezone.utc).isoformat()
            writer.writerow([iso, cat, n])
    work.write_manifest("trend", [work.path("predictions"), work.path("corpus")], [out])


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stormwatch",
                                     description="weakly supervised event recognition pipeline")
    parser.add_argument("--config", required=True, help="pipeline config file (YAML)")
    parser.add_argument("--workdir", help="override workdir from config")
    parser.add_argument("--seed", type=int, help="override seed from config")
    parser.add_argument("--corpus", dest="corpus_path", help="override corpus path")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("ingest", "select-words", "build-graph", "cluster",
                 "assemble-labels", "train", "bootstrap", "trend"):
        sub.add_parser(name)
    serve = sub.add_parser("annotate-serve")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8410)
    oracle = sub.add_parser("annotate-oracle")
    oracle.add_argument("--truth", required=True, help="tweet id -> true category JSON")
    pred = sub.add_parser("predict")
    pred.add_argument("--model", choices=("seed", "bootstrap"), default="bootstrap")
    evalp = sub.add_parser("evaluate")
    evalp.add_argument("--gold", required=True)
    evalp.add_argument("--predictions", default="predictions",
                       choices=("predictions", "baseline_keyword", "baseline_slpa"))
    base = sub.add_parser("baseline")
    base.add_argument("which", choices=("keyword", "slpa"))
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, workdir=args.workdir, seed=args.seed,
                             corpus_path=args.corpus_path)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    work = Workdir(config)
    try:
        with WorkdirLock(work.root):
            if args.command == "ingest":
                stage_ingest(config, work)
            elif args.command == "select-words":
                stage_select_words(config, work)
            elif args.command == "build-graph":
                stage_build_graph(config, work)
            elif args.command == "cluster":
                stage_cluster(config, work)
            elif args.command == "annotate-serve":
                stage_annotate_serve(config, work, args.host, args.port)
            elif args.command == "annotate-oracle":
                stage_annotate_oracle(config, work, args.truth)
            elif args.command == "assemble-labels":
                stage_assemble_labels(config, work)
            elif args.command == "train":
                stage_train(config, work)
            elif args.command == "bootstrap":
                stage_bootstrap(config, work)
            elif args.command == "predict":
                stage_predict(config, work, args.model)
            elif args.command == "evaluate":
                stage_evaluate(config, work, args.gold, args.predictions)
            elif args.command == "baseline":
                stage_baseline(config, work, args.which)
            elif args.command == "trend":
                stage_trend(config, work)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failure path
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
