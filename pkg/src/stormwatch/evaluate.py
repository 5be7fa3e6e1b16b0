"""Multi-label evaluation, unsupervised baselines and hourly trend counts.

Per-category precision/recall/F1 use standard multi-label confusion counts;
the macro average is the unweighted mean over the nine event categories,
excluding the catch-all. Categories with neither gold nor predicted positives
score zero and are flagged rather than dropped, keeping macro numbers
comparable across runs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .graph_cluster import ProfiledTweet
from .ontology import EVENT_CATEGORIES, EventCategory, KeywordLexicon


@dataclass(frozen=True)
class CategoryMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    tp: int
    fp: int
    fn: int
    flagged: bool


@dataclass
class EvalReport:
    per_category: dict[EventCategory, CategoryMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def to_dict(self) -> dict:
        return {
            "per_category": {
                cat.name: vars(m) for cat, m in sorted(self.per_category.items())
            },
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }

    def table(self) -> str:
        lines = [f"{'category':<10}{'P':>8}{'R':>8}{'F1':>8}{'support':>9}"]
        for cat in EVENT_CATEGORIES:
            m = self.per_category[cat]
            flag = " *" if m.flagged else ""
            lines.append(f"{cat.name:<10}{m.precision:>8.3f}{m.recall:>8.3f}"
                         f"{m.f1:>8.3f}{m.support:>9d}{flag}")
        lines.append(f"{'macro':<10}{self.macro_precision:>8.3f}"
                     f"{self.macro_recall:>8.3f}{self.macro_f1:>8.3f}")
        return "\n".join(lines)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def evaluate(predictions: Mapping[str, Iterable[EventCategory]],
             gold: Mapping[str, Iterable[EventCategory]]) -> EvalReport:
    """Per-category and macro P/R/F1 of multi-label predictions against gold."""
    missing_pred = sorted(set(gold) - set(predictions))
    missing_gold = sorted(set(predictions) - set(gold))
    if missing_pred or missing_gold:
        raise ValueError(
            f"prediction/gold id mismatch: missing predictions for {missing_pred[:5]}, "
            f"missing gold for {missing_gold[:5]}")

    per_category: dict[EventCategory, CategoryMetrics] = {}
    macro_p = macro_r = macro_f1 = 0.0
    for cat in EVENT_CATEGORIES:
        tp = fp = fn = support = 0
        for tweet_id in gold:
            in_gold = cat in set(gold[tweet_id])
            in_pred = cat in set(predictions[tweet_id])
            support += in_gold
            if in_pred and in_gold:
                tp += 1
            elif in_pred:
                fp += 1
            elif in_gold:
                fn += 1
        p, r, f1 = _prf(tp, fp, fn)
        flagged = (tp + fp + fn) == 0
        per_category[cat] = CategoryMetrics(precision=p, recall=r, f1=f1,
                                            support=support, tp=tp, fp=fp, fn=fn,
                                            flagged=flagged)
        macro_p += p
        macro_r += r
        macro_f1 += f1
    n = len(EVENT_CATEGORIES)
    return EvalReport(per_category=per_category, macro_precision=macro_p / n,
                      macro_recall=macro_r / n, macro_f1=macro_f1 / n)


# ---------------------------------------------------------------------------
# Cluster-vote baseline
# ---------------------------------------------------------------------------

def label_clusters_by_keywords(clusters, lexicon: KeywordLexicon) -> dict[str, frozenset[EventCategory]]:
    """Assign categories to clusters whose top-ten words contain a keyword."""
    out = {}
    for c in clusters:
        cats = set()
        for word in c.top_words:
            cats.update(lexicon.categories_of(word))
        out[c.id] = frozenset(cats)
    return out


def slpa_baseline_predict(target: ProfiledTweet, pool: Sequence[ProfiledTweet],
                          tweet_labels: Mapping[str, frozenset[EventCategory]],
                          min_shared: int = 2) -> set[EventCategory]:
    """Majority event label over the target's graph neighbors in the pool.

    Neighbors are pool tweets sharing >= ``min_shared`` selected words (the
    similarity-graph edge rule). Ties go to the larger summed edge weight,
    then the smallest category ordinal. No neighbors means OTHER.
    """
    votes: Counter[EventCategory] = Counter()
    weight_sum: dict[EventCategory, float] = {}
    for other in pool:
        if other.tweet_id == target.tweet_id:
            continue
        shared = len(target.selected & other.selected)
        if shared < min_shared or not target.tokens or not other.tokens:
            continue
        w = shared / (len(target.tokens) * len(other.tokens))
        labels = tweet_labels.get(other.tweet_id) or frozenset({EventCategory.OTHER})
        for cat in labels:
            votes[cat] += 1
            weight_sum[cat] = weight_sum.get(cat, 0.0) + w
    if not votes:
        return {EventCategory.OTHER}
    winner = sorted(votes, key=lambda c: (-votes[c], -weight_sum[c], c.value))[0]
    return {winner}


# ---------------------------------------------------------------------------
# Trend counts
# ---------------------------------------------------------------------------

def trend_counts(items: Iterable[tuple[Iterable[EventCategory], int]],
                 bucket_seconds: int = 3600) -> dict[tuple[int, EventCategory], int]:
    """Counts per (UTC bucket start, category); multi-label tweets count once
    in every category they carry."""
    counts: dict[tuple[int, EventCategory], int] = {}
    for labels, ts in items:
        bucket = (ts // bucket_seconds) * bucket_seconds
        for cat in set(labels):
            key = (bucket, cat)
            counts[key] = counts.get(key, 0) + 1
    return counts


def trend_table(counts: Mapping[tuple[int, EventCategory], int]) -> list[tuple[int, str, int]]:
    """Plot-ready rows (bucket_start_epoch, category, count), sorted."""
    return sorted((bucket, cat.name, n) for (bucket, cat), n in counts.items())
