"""HTTP API for the annotation console.

Endpoints (all JSON):
  GET  /categories            -> per-category progress
  GET  /queue/next?category=X -> next ranked cluster with 5 highlighted samples
  POST /decision              -> record a verdict, returns updated progress
  GET  /export                -> assembled labeled set plus cleaning report

Duplicate decisions return 409 with the standing verdict; unknown clusters 404.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .corpus import Corpus, tokenize
from .ontology import EventCategory, KeywordLexicon
from .wsd import (
    AnnotationSession,
    ClusterDecision,
    DuplicateDecisionError,
    Progress,
    assemble_labeled_set,
)


class DecisionBody(BaseModel):
    cluster_id: str
    category: str
    verdict: str
    redirect: Optional[str] = None
    annotator_id: str = "anonymous"


def _progress_payload(p: Progress) -> dict:
    return {"category": p.category.name, "pertinent": p.pertinent,
            "decided": p.decided, "remaining": p.remaining, "done": p.done}


def _parse_category(name: str) -> EventCategory:
    try:
        return EventCategory[name]
    except KeyError:
        raise HTTPException(status_code=400, detail=f"unknown category: {name}")


def highlight_spans(text: str, lexicon: KeywordLexicon) -> list[list[int]]:
    """Character spans of keyword tokens in the raw text."""
    tokens, spans = tokenize(text)
    positions = lexicon.keyword_positions(tokens)
    return [[spans[i][0], spans[i][1]] for i in positions]


def create_app(session: AnnotationSession, corpus: Corpus,
               lexicon: KeywordLexicon,
               pools: Optional[dict[EventCategory, set[str]]] = None) -> FastAPI:
    app = FastAPI(title="stormwatch annotation service")

    @app.get("/categories")
    def categories():
        return {"categories": [_progress_payload(session.progress(c))
                               for c in session.categories()]}

    @app.get("/queue/next")
    def queue_next(category: str):
        cat = _parse_category(category)
        item = session.next_cluster(cat)
        if item is None:
            return {"status": "done", "progress": _progress_payload(session.progress(cat))}
        cluster, sample_ids = item
        samples = []
        for tweet_id in sample_ids:
            text = corpus.get(tweet_id).text
            samples.append({
                "tweet_id": tweet_id,
                "text": text,
                "highlights": highlight_spans(text, lexicon),
            })
        return {
            "status": "cluster",
            "category": cat.name,
            "cluster_id": cluster.id,
            "size": cluster.size,
            "top_words": list(cluster.top_words),
            "samples": samples,
            "progress": _progress_payload(session.progress(cat)),
        }

    @app.post("/decision")
    def decision(body: DecisionBody):
        cat = _parse_category(body.category)
        redirect = EventCategory[body.redirect] if body.redirect else None
        try:
            d = ClusterDecision(cluster_id=body.cluster_id, category=cat,
                                verdict=body.verdict, redirect=redirect,
                                annotator_id=body.annotator_id)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            progress = session.record_decision(d)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except DuplicateDecisionError as exc:
            raise HTTPException(status_code=409, detail={
                "error": "duplicate decision",
                "existing_verdict": exc.existing.verdict,
                "progress": _progress_payload(session.progress(cat)),
            })
        return {"status": "recorded", "progress": _progress_payload(progress)}

    @app.get("/export")
    def export():
        cluster_pools = pools if pools is not None else {
            cat: {m for c in session.queues[cat] for m in c.members}
            for cat in session.queues
        }
        examples, report = assemble_labeled_set(
            session.journal, session.queues, cluster_pools)
        return {
            "examples": [
                {"tweet_id": ex.tweet_id,
                 "labels": sorted(l.name for l in ex.labels),
                 "provenance": ex.provenance}
                for ex in examples
            ],
            "report": report.to_dict(),
        }

    return app
