"""Tweet similarity graph and overlapping clusters via weighted label propagation.

Nodes are tweets; an edge exists exactly when two tweets share at least two
selected (important) words, weighted by
|shared selected| / (token count of u * token count of v).

Clustering follows the speaker-listener label propagation scheme: every node
starts as its own cluster, then over seeded iterations each listener collects
one label from every neighbor (sampled from the speaker's memory) and accepts
the label with the greatest incident edge weight. Labels held with memory
frequency above a threshold define overlapping memberships; connected
same-label node sets become clusters.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class ProfiledTweet:
    """A tokenized tweet together with its selected important words."""

    tweet_id: str
    tokens: tuple[str, ...]
    selected: frozenset[str]


def similarity(u: ProfiledTweet, v: ProfiledTweet) -> float:
    """|selected(u) & selected(v)| / (len(u) * len(v)); 0 for empty token lists."""
    if not u.tokens or not v.tokens:
        return 0.0
    shared = len(u.selected & v.selected)
    return shared / (len(u.tokens) * len(v.tokens))


@dataclass
class TweetGraph:
    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (a, b), w in self.edges.items():
            if a == b:
                raise ValueError("self-loop")
            if w <= 0:
                raise ValueError("edge weight must be positive")

    @property
    def adjacency(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (a, b), w in self.edges.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj

    def neighbors(self, node: str) -> dict[str, float]:
        return self.adjacency[node]


def build_graph(pool: Sequence[ProfiledTweet], min_shared: int = 2) -> TweetGraph:
    """Similarity graph over a pool, via an inverted selected-word index.

    Only tweet pairs that co-occur in at least one word bucket are examined;
    a pair becomes an edge when it shares >= ``min_shared`` selected words.
    """
    by_id = {}
    for t in pool:
        if t.tweet_id in by_id:
            raise ValueError(f"duplicate tweet id in pool: {t.tweet_id}")
        by_id[t.tweet_id] = t
    buckets: dict[str, list[str]] = defaultdict(list)
    for t in pool:
        for word in t.selected:
            buckets[word].append(t.tweet_id)
    shared_counts: Counter[tuple[str, str]] = Counter()
    for word in buckets:
        ids = sorted(buckets[word])
        for a, b in combinations(ids, 2):
            shared_counts[(a, b)] += 1
    edges: dict[tuple[str, str], float] = {}
    for (a, b), shared in shared_counts.items():
        if shared >= min_shared:
            w = similarity(by_id[a], by_id[b])
            if w > 0:
                edges[(a, b)] = w
    return TweetGraph(nodes=tuple(sorted(by_id)), edges=edges)


@dataclass(frozen=True)
class Cluster:
    id: str
    members: tuple[str, ...]
    top_words: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.members)


class SlpaState:
    """Propagation state: per-node label memories plus the seeded RNG.

    Invariant: every node's memory counts sum to iterations_done + 1 (the
    initial self-label plus one accepted label per listener turn; listeners
    with no neighbors re-accept their own label).

    Memories are flat parallel lists in first-acceptance order; the whole
    iteration draws its uniforms in one batch. Both choices are purely for
    speed and keep the procedure deterministic for a fixed seed.
    """

    def __init__(self, graph: TweetGraph, seed: int, speaker_rule: str = "sample"):
        if speaker_rule not in ("sample", "argmax"):
            raise ValueError(f"unknown speaker rule: {speaker_rule}")
        self.graph = graph
        self.nodes = sorted(graph.nodes)
        adjacency = graph.adjacency
        self._neighbors = {n: sorted(adjacency[n].items()) for n in self.nodes}
        self._degree_sum = sum(len(v) for v in self._neighbors.values())
        self.rng = np.random.default_rng(seed)
        self.speaker_rule = speaker_rule
        self.iterations_done = 0
        self._labels: dict[str, list[str]] = {n: [n] for n in self.nodes}
        self._counts: dict[str, list[int]] = {n: [1] for n in self.nodes}
        self._index: dict[str, dict[str, int]] = {n: {n: 0} for n in self.nodes}
        self._totals: dict[str, int] = {n: 1 for n in self.nodes}

    @property
    def memory(self) -> dict[str, Counter[str]]:
        return {n: Counter(dict(zip(self._labels[n], self._counts[n])))
                for n in self.nodes}

    def _bump(self, node: str, label: str) -> None:
        pos = self._index[node].get(label)
        if pos is None:
            self._index[node][label] = len(self._labels[node])
            self._labels[node].append(label)
            self._counts[node].append(1)
        else:
            self._counts[node][pos] += 1
        self._totals[node] += 1

    def step(self) -> None:
        """One full iteration: every node listens once, in seeded random order."""
        order = self.rng.permutation(len(self.nodes))
        uniforms = self.rng.random(self._degree_sum)
        sampling = self.speaker_rule == "sample"
        ui = 0
        for node_idx in order:
            listener = self.nodes[node_idx]
            neighbors = self._neighbors[listener]
            if not neighbors:
                self._bump(listener, listener)
                continue
            votes: dict[str, float] = {}
            for speaker, weight in neighbors:
                labels = self._labels[speaker]
                counts = self._counts[speaker]
                if sampling:
                    x = uniforms[ui] * self._totals[speaker]
                    ui += 1
                    acc = 0
                    label = labels[-1]
                    for pos, cnt in enumerate(counts):
                        acc += cnt
                        if x < acc:
                            label = labels[pos]
                            break
                else:
                    best_pos = 0
                    for pos in range(1, len(counts)):
                        if counts[pos] > counts[best_pos] or (
                                counts[pos] == counts[best_pos]
                                and labels[pos] < labels[best_pos]):
                            best_pos = pos
                    label = labels[best_pos]
                votes[label] = votes.get(label, 0.0) + weight
            accepted = None
            accepted_w = -1.0
            for label, w in votes.items():
                if w > accepted_w or (w == accepted_w and label < accepted):
                    accepted, accepted_w = label, w
            self._bump(listener, accepted)
        self.iterations_done += 1

    def memberships(self, r: float) -> dict[str, set[str]]:
        """Labels each node holds with memory frequency strictly above ``r``.

        A node whose every label falls at or below the threshold keeps its
        single most frequent label, so no node is ever orphaned.
        """
        total = self.iterations_done + 1
        out: dict[str, set[str]] = {}
        for node in self.nodes:
            labels = self._labels[node]
            counts = self._counts[node]
            kept = {labels[i] for i, cnt in enumerate(counts) if cnt / total > r}
            if not kept:
                best = min(range(len(labels)), key=lambda i: (-counts[i], labels[i]))
                kept = {labels[best]}
            out[node] = kept
        return out

    def clusters(self, r: float, id_prefix: str = "",
                 selected_words: Optional[dict[str, frozenset[str]]] = None) -> list[Cluster]:
        """Connected same-label node sets, as overlapping clusters."""
        member_of = self.memberships(r)
        label_nodes: dict[str, set[str]] = defaultdict(set)
        for node, labels in member_of.items():
            for label in labels:
                label_nodes[label].add(node)
        clusters: list[Cluster] = []
        for label in sorted(label_nodes):
            nodes = label_nodes[label]
            seen: set[str] = set()
            comp_idx = 0
            for start in sorted(nodes):
                if start in seen:
                    continue
                comp = {start}
                frontier = [start]
                while frontier:
                    cur = frontier.pop()
                    for nb, _w in self._neighbors[cur]:
                        if nb in nodes and nb not in comp:
                            comp.add(nb)
                            frontier.append(nb)
                seen |= comp
                members = tuple(sorted(comp))
                cid = f"{id_prefix}{label}:{comp_idx}"
                clusters.append(Cluster(id=cid, members=members,
                                        top_words=_top_words(members, selected_words)))
                comp_idx += 1
        return rank_clusters(clusters)


def _top_words(members: Sequence[str], selected_words: Optional[dict[str, frozenset[str]]],
               k: int = 10) -> tuple[str, ...]:
    if not selected_words:
        return ()
    counts: Counter[str] = Counter()
    for m in members:
        counts.update(selected_words.get(m, frozenset()))
    ranked = sorted(counts, key=lambda w: (-counts[w], w))
    return tuple(ranked[:k])


def slpa_cluster(graph: TweetGraph, iterations: int, r: float, seed: int,
                 speaker_rule: str = "sample", id_prefix: str = "",
                 selected_words: Optional[dict[str, frozenset[str]]] = None) -> list[Cluster]:
    """Run the full propagation and return ranked overlapping clusters."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not (0 < r <= 0.5):
        raise ValueError("threshold r must be in (0, 0.5]")
    if not graph.nodes:
        return []
    state = SlpaState(graph, seed=seed, speaker_rule=speaker_rule)
    for _ in range(iterations):
        state.step()
    return state.clusters(r, id_prefix=id_prefix, selected_words=selected_words)


def rank_clusters(clusters: Iterable[Cluster]) -> list[Cluster]:
    """Descending by size; ties by smallest member tweet id."""
    return sorted(clusters, key=lambda c: (-c.size, min(c.members)))


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------

GRAPH_FORMAT = "stormwatch-graph"
CLUSTERS_FORMAT = "stormwatch-clusters"
SNAPSHOT_VERSION = 1


def save_graph(graph: TweetGraph, path: str | Path) -> None:
    doc = {
        "format": GRAPH_FORMAT, "version": SNAPSHOT_VERSION,
        "nodes": list(graph.nodes),
        "edges": [[a, b, w] for (a, b), w in sorted(graph.edges.items())],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_graph(path: str | Path) -> TweetGraph:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != GRAPH_FORMAT or doc.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"not a supported graph snapshot: {path}")
    return TweetGraph(nodes=tuple(doc["nodes"]),
                      edges={(a, b): w for a, b, w in doc["edges"]})


def save_clusters(clusters: Sequence[Cluster], path: str | Path,
                  meta: Optional[dict] = None) -> None:
    doc = {
        "format": CLUSTERS_FORMAT, "version": SNAPSHOT_VERSION,
        "meta": meta or {},
        "clusters": [
            {"id": c.id, "members": list(c.members), "top_words": list(c.top_words)}
            for c in clusters
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_clusters(path: str | Path) -> tuple[list[Cluster], dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CLUSTERS_FORMAT or doc.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"not a supported cluster snapshot: {path}")
    clusters = [Cluster(id=c["id"], members=tuple(c["members"]),
                        top_words=tuple(c["top_words"]))
                for c in doc["clusters"]]
    return clusters, doc.get("meta", {})
