"""Shared builders for the test suite: documents, planted corpora, partitions."""

from __future__ import annotations

import json
from datetime import datetime, timedelta

import numpy as np

from storystream.core import Document, SectionAnnotations, SectionKind
from storystream.represent import EmbeddingStore


def ann(words=(), entities=None) -> SectionAnnotations:
    """Annotations where lemmas mirror the (lowercased) tokens."""
    words = tuple(words)
    return SectionAnnotations(
        tokens=words,
        lemmas=tuple(w.lower() for w in words),
        entities=tuple(entities or ()),
    )


def make_doc(doc_id, title_words, body_words, timestamp, *, entities=(),
             gold=None) -> Document:
    return Document.build(
        id=doc_id,
        title=" ".join(title_words),
        body=" ".join(body_words),
        timestamp=timestamp,
        title_ann=ann(title_words, entities),
        body_ann=ann(body_words, entities),
        gold_cluster=gold,
    )


def planted_corpus(n_events, docs_per_event, rng, *, dim=16,
                   start=datetime(2024, 1, 1), day_gap=10.0, noise=0.05):
    """A synthetic stream with well-separated events.

    Each event gets its own token vocabulary, entity, dense direction and
    time window (events ``day_gap`` days apart, documents hours apart), so
    every feature group carries signal.  Returns (docs, embedding store);
    docs are ordered by timestamp.
    """
    centers = rng.normal(size=(n_events, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    docs = []
    store = EmbeddingStore(dim=dim)
    for e in range(n_events):
        vocab = [f"ev{e}w{k}" for k in range(6)]
        entity = f"entity{e}"
        base = start + timedelta(days=e * day_gap)
        for j in range(docs_per_event):
            words = list(rng.choice(vocab, size=3, replace=False))
            doc_id = f"e{e}d{j}"
            doc = make_doc(
                doc_id,
                title_words=words[:2] + ["news"],
                body_words=words + [f"ev{e}d{j}", "today"],
                timestamp=base + timedelta(hours=3 * j),
                entities=(entity,),
                gold=f"event{e}",
            )
            docs.append(doc)
            vec = centers[e] + noise * rng.normal(size=dim)
            store.add(doc_id, vec / np.linalg.norm(vec))
    docs.sort(key=lambda d: (d.timestamp, d.id))
    return docs, store


def gold_partition(docs) -> dict:
    return {d.id: d.gold_cluster for d in docs}


def random_partition(rng, ids, max_clusters) -> dict:
    labels = rng.integers(0, max_clusters, size=len(ids))
    return {doc_id: f"c{lab}" for doc_id, lab in zip(ids, labels)}


def _ann_dict(a: SectionAnnotations) -> dict:
    return {"tokens": list(a.tokens), "lemmas": list(a.lemmas),
            "entities": list(a.entities)}


def docs_to_jsonl(docs, path) -> None:
    """Write documents as the line-JSON corpus format the loaders read."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            rec = {
                "id": d.id,
                "date": d.timestamp.isoformat(sep=" "),
                "lang": "eng",
                "title": d.title,
                "text": d.body,
                "features": {
                    "title": _ann_dict(d.sections[SectionKind.TITLE]),
                    "body": _ann_dict(d.sections[SectionKind.BODY]),
                    "titlebody": _ann_dict(d.sections[SectionKind.TITLEBODY]),
                },
            }
            if d.gold_cluster is not None:
                rec["cluster"] = d.gold_cluster
            fh.write(json.dumps(rec) + "\n")
