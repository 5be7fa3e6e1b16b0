"""Clustering-assisted manual word sense disambiguation workflow.

Clusters of keyword-identified tweets are served largest-first, five sampled
member tweets at a time. An annotator marks each cluster pertinent (members
use the keyword in the event sense), other-sense, or belonging to a different
category. Review of a category stops after a fixed number of pertinent
verdicts (default 20). Every verdict is appended to a journal; session state
is a pure fold over the journal, so replay reconstructs it exactly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .classifier import LabeledExample
from .graph_cluster import Cluster, rank_clusters
from .ontology import EventCategory

logger = logging.getLogger("stormwatch.wsd")

PERTINENT = "pertinent"
OTHER_SENSE = "other_sense"
OTHER_CATEGORY = "other_category"
VERDICTS = (PERTINENT, OTHER_SENSE, OTHER_CATEGORY)

DEFAULT_PERTINENT_TARGET = 20
SAMPLE_SIZE = 5


@dataclass(frozen=True)
class ClusterDecision:
    cluster_id: str
    category: EventCategory
    verdict: str
    redirect: Optional[EventCategory] = None
    annotator_id: str = "anonymous"
    decided_at: float = 0.0

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict: {self.verdict}")
        if self.verdict == OTHER_CATEGORY:
            if self.redirect is None or self.redirect == self.category:
                raise ValueError("other_category verdict needs a different category")
        elif self.redirect is not None:
            raise ValueError("redirect only allowed with other_category")

    def to_record(self) -> dict:
        rec = {
            "cluster_id": self.cluster_id,
            "category": self.category.name,
            "verdict": self.verdict,
            "annotator_id": self.annotator_id,
            "decided_at": self.decided_at,
        }
        if self.redirect is not None:
            rec["redirect"] = self.redirect.name
        return rec

    @staticmethod
    def from_record(rec: Mapping) -> "ClusterDecision":
        redirect = rec.get("redirect")
        return ClusterDecision(
            cluster_id=rec["cluster_id"],
            category=EventCategory[rec["category"]],
            verdict=rec["verdict"],
            redirect=EventCategory[redirect] if redirect else None,
            annotator_id=rec.get("annotator_id", "anonymous"),
            decided_at=float(rec.get("decided_at", 0.0)),
        )


@dataclass(frozen=True)
class Progress:
    category: EventCategory
    pertinent: int
    decided: int
    remaining: int
    done: bool


class DuplicateDecisionError(Exception):
    def __init__(self, existing: ClusterDecision):
        super().__init__(f"cluster {existing.cluster_id} already decided: {existing.verdict}")
        self.existing = existing


class AnnotationSession:
    """Serves the ranked cluster queue and folds decisions into progress.

    The sampling seed is fixed per session and hashed with the cluster id,
    so reloading the console shows the same five examples.
    """

    def __init__(self, clusters_by_category: Mapping[EventCategory, Sequence[Cluster]],
                 seed: int, pertinent_target: int = DEFAULT_PERTINENT_TARGET,
                 journal_path: Optional[str | Path] = None,
                 clock: Optional[Callable[[], float]] = None,
                 allow_supersede: bool = False):
        self.queues = {cat: rank_clusters(clusters)
                       for cat, clusters in clusters_by_category.items()}
        self.clusters: dict[str, Cluster] = {}
        for clusters in self.queues.values():
            for c in clusters:
                self.clusters[c.id] = c
        self.seed = seed
        self.pertinent_target = pertinent_target
        self.journal_path = Path(journal_path) if journal_path else None
        self.clock = clock if clock is not None else time.time
        # corrections: a re-decision appends a superseding journal entry
        # instead of being rejected as a duplicate
        self.allow_supersede = allow_supersede
        self.decisions: dict[tuple[str, EventCategory], ClusterDecision] = {}
        self.journal: list[ClusterDecision] = []
        if self.journal_path and self.journal_path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.journal_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    self._fold(ClusterDecision.from_record(json.loads(line)))

    def _fold(self, decision: ClusterDecision) -> None:
        self.decisions[(decision.cluster_id, decision.category)] = decision
        self.journal.append(decision)

    def categories(self) -> list[EventCategory]:
        return sorted(self.queues, key=lambda c: c.value)

    def progress(self, category: EventCategory) -> Progress:
        queue = self.queues.get(category, [])
        decided = [c for c in queue if (c.id, category) in self.decisions]
        pertinent = sum(1 for c in decided
                        if self.decisions[(c.id, category)].verdict == PERTINENT)
        remaining = len(queue) - len(decided)
        done = pertinent >= self.pertinent_target or remaining == 0
        return Progress(category=category, pertinent=pertinent, decided=len(decided),
                        remaining=remaining, done=done)

    def sample_members(self, cluster: Cluster, k: int = SAMPLE_SIZE) -> list[str]:
        """Up to ``k`` member ids without replacement, stable per (seed, cluster)."""
        members = sorted(cluster.members)
        if len(members) <= k:
            return members
        digest = hashlib.sha256(f"{self.seed}:{cluster.id}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        idx = rng.choice(len(members), size=k, replace=False)
        return [members[i] for i in sorted(idx)]

    def next_cluster(self, category: EventCategory) -> Optional[tuple[Cluster, list[str]]]:
        """Largest undecided cluster plus sampled member ids; None when done."""
        if self.progress(category).done:
            return None
        for cluster in self.queues.get(category, []):
            if (cluster.id, category) not in self.decisions:
                return cluster, self.sample_members(cluster)
        return None

    def record_decision(self, decision: ClusterDecision) -> Progress:
        """Append one verdict to the journal.

        Re-deciding a cluster raises DuplicateDecisionError unless the
        session allows superseding corrections, in which case the new entry
        is journaled and wins the fold.
        """
        if decision.cluster_id not in self.clusters:
            raise KeyError(f"unknown cluster: {decision.cluster_id}")
        key = (decision.cluster_id, decision.category)
        if key in self.decisions and not self.allow_supersede:
            raise DuplicateDecisionError(self.decisions[key])
        if decision.decided_at == 0.0:
            decision = ClusterDecision(
                cluster_id=decision.cluster_id, category=decision.category,
                verdict=decision.verdict, redirect=decision.redirect,
                annotator_id=decision.annotator_id, decided_at=float(self.clock()))
        if self.journal_path:
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(decision.to_record(), sort_keys=True) + "\n")
        self._fold(decision)
        return self.progress(decision.category)


def sequence_clock() -> Callable[[], float]:
    """Logical clock for deterministic journals (oracle/synthetic runs)."""
    counter = {"t": 0}

    def tick() -> float:
        counter["t"] += 1
        return float(counter["t"])

    return tick


# ---------------------------------------------------------------------------
# Labeled-set assembly
# ---------------------------------------------------------------------------

@dataclass
class CleaningReport:
    """Kept/removed counts per category after cluster-level cleaning."""

    per_category: dict[EventCategory, dict[str, int]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_category": {c.name: dict(v) for c, v in sorted(self.per_category.items())},
            "warnings": list(self.warnings),
        }


def assemble_labeled_set(
    decisions: Iterable[ClusterDecision],
    clusters_by_category: Mapping[EventCategory, Sequence[Cluster]],
    pools: Mapping[EventCategory, Iterable[str]],
) -> tuple[list[LabeledExample], CleaningReport]:
    """Turn cluster verdicts into seed training labels.

    Members of pertinent clusters get the category (a tweet pertinent for two
    categories gets both); other_category members get the redirected category;
    other_sense members become OTHER unless positively labeled elsewhere;
    keyword tweets in no retained cluster are dropped.
    """
    by_cluster = {c.id: c for clusters in clusters_by_category.values() for c in clusters}
    positives: dict[str, set[EventCategory]] = {}
    other_candidates: set[str] = set()
    retained: set[str] = set()
    pertinent_counts: dict[EventCategory, int] = {cat: 0 for cat in clusters_by_category}

    for d in decisions:
        cluster = by_cluster.get(d.cluster_id)
        if cluster is None:
            continue
        if d.verdict == PERTINENT:
            pertinent_counts[d.category] = pertinent_counts.get(d.category, 0) + 1
            for m in cluster.members:
                positives.setdefault(m, set()).add(d.category)
                retained.add(m)
        elif d.verdict == OTHER_CATEGORY:
            for m in cluster.members:
                positives.setdefault(m, set()).add(d.redirect)
                retained.add(m)
        elif d.verdict == OTHER_SENSE:
            for m in cluster.members:
                other_candidates.add(m)
                retained.add(m)

    examples: list[LabeledExample] = []
    for tweet_id in sorted(positives):
        examples.append(LabeledExample(tweet_id=tweet_id,
                                       labels=frozenset(positives[tweet_id]),
                                       provenance="seed"))
    for tweet_id in sorted(other_candidates - set(positives)):
        examples.append(LabeledExample(tweet_id=tweet_id,
                                       labels=frozenset({EventCategory.OTHER}),
                                       provenance="seed"))

    report = CleaningReport()
    for cat in sorted(pools, key=lambda c: c.value):
        pool = set(pools[cat])
        kept_positive = sum(1 for t in pool if cat in positives.get(t, ()))
        kept_other = len(pool & (other_candidates - set(positives)))
        kept_any = len(pool & retained)
        removed = len(pool) - kept_any
        report.per_category[cat] = {
            "pool": len(pool),
            "kept_positive": kept_positive,
            "kept_other": kept_other,
            "removed": removed,
        }
        if pertinent_counts.get(cat, 0) == 0:
            msg = f"no pertinent clusters for {cat.name}: zero positives"
            report.warnings.append(msg)
            logger.warning(msg)
    return examples, report


# ---------------------------------------------------------------------------
# Oracle annotator (test double)
# ---------------------------------------------------------------------------

def oracle_annotate(session: AnnotationSession,
                    truth: Mapping[str, Optional[EventCategory]],
                    min_pertinent_fraction: float = 0.5,
                    annotator_id: str = "oracle") -> int:
    """Answer every queued cluster from planted ground truth.

    A cluster is pertinent for the category under review when at least
    ``min_pertinent_fraction`` of its members carry that true label;
    otherwise it is judged other-sense. Returns the number of decisions made.
    """
    made = 0
    for category in session.categories():
        while True:
            item = session.next_cluster(category)
            if item is None:
                break
            cluster, _samples = item
            in_sense = sum(1 for m in cluster.members if truth.get(m) == category)
            verdict = PERTINENT if in_sense / len(cluster.members) >= min_pertinent_fraction \
                else OTHER_SENSE
            session.record_decision(ClusterDecision(
                cluster_id=cluster.id, category=category, verdict=verdict,
                annotator_id=annotator_id))
            made += 1
    return made
