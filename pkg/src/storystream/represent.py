"""TF-IDF encoding, embedding lookup and cluster aggregation."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import (
    SPARSE_KEYS,
    ClusterRep,
    DocRepSet,
    Document,
    SectionKind,
    SparseVector,
    Unit,
    as_dense,
    epoch_seconds,
)
from .errors import DimensionMismatch, DuplicateDocument, EmptyCorpus, MissingEmbedding


@dataclass(frozen=True)
class TfidfModel:
    """Vocabulary and inverse document frequencies for one unit."""

    unit: Unit
    vocabulary: Mapping[str, int]
    idf: np.ndarray
    doc_count: int

    def __post_init__(self):
        object.__setattr__(self, "idf", np.asarray(self.idf, dtype=np.float64))
        if len(self.idf) != len(self.vocabulary):
            raise ValueError("idf length must equal vocabulary size")
        if self.vocabulary and (max(self.vocabulary.values()) >= len(self.vocabulary)
                                or min(self.vocabulary.values()) < 0):
            raise ValueError("vocabulary indices must be dense in [0, |V|)")
        if len(self.idf) and (not np.all(np.isfinite(self.idf)) or np.any(self.idf <= 0)):
            raise ValueError("idf values must be finite and positive")
        if self.doc_count < 1:
            raise ValueError("doc_count must be positive")


def fit_tfidf(corpus: list[Document], unit: Unit) -> TfidfModel:
    """Fit one TF-IDF model on a corpus.

    The vocabulary covers every term of ``unit`` appearing in any section of
    any document; document frequency is counted over title+body sections so
    each term gets a single idf, computed as ln(N / df) + 1.
    """
    if not corpus:
        raise EmptyCorpus("cannot fit TF-IDF on an empty corpus")
    n = len(corpus)
    terms: set[str] = set()
    df: Counter[str] = Counter()
    for doc in corpus:
        for section in SectionKind:
            terms.update(doc.sections[section].terms(unit))
        df.update(set(doc.sections[SectionKind.TITLEBODY].terms(unit)))
    vocabulary = {t: i for i, t in enumerate(sorted(terms))}
    idf = np.empty(len(vocabulary))
    for t, i in vocabulary.items():
        # df >= 1 by construction when titlebody is a superset of the other
        # sections; clamp to guard corpora with inconsistent annotations
        idf[i] = math.log(n / max(df[t], 1)) + 1.0
    return TfidfModel(unit=unit, vocabulary=vocabulary, idf=idf, doc_count=n)


def encode_sparse(doc: Document, model: TfidfModel, section: SectionKind) -> SparseVector:
    """TF-IDF bag for one section: tf(term) * idf(term), out-of-vocabulary
    terms dropped."""
    counts = Counter(doc.sections[section].terms(model.unit))
    weighted: dict[int, float] = {}
    for term, tf in counts.items():
        idx = model.vocabulary.get(term)
        if idx is not None:
            weighted[idx] = tf * float(model.idf[idx])
    return SparseVector.from_mapping(weighted)


@dataclass
class EmbeddingStore:
    """Dense document vectors keyed by document id.

    ``default`` (when set) is returned for unknown ids, letting TF-IDF-only
    configurations run without an embedding file.
    """

    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    default: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("embedding dimension must be positive")
        for doc_id, vec in list(self.vectors.items()):
            self.vectors[doc_id] = self._check(vec)
        if self.default is not None:
            self.default = self._check(self.default)

    @classmethod
    def zeros(cls, dim: int = 1) -> "EmbeddingStore":
        return cls(dim=dim, default=np.zeros(dim))

    def _check(self, vec) -> np.ndarray:
        arr = as_dense(vec)
        if arr.shape[0] != self.dim:
            raise DimensionMismatch(
                f"expected dimension {self.dim}, got {arr.shape[0]}")
        return arr

    def add(self, doc_id: str, vec) -> None:
        self.vectors[doc_id] = self._check(vec)

    def get(self, doc_id: str) -> np.ndarray:
        vec = self.vectors.get(doc_id)
        if vec is None:
            if self.default is not None:
                return self.default
            raise MissingEmbedding(doc_id)
        return vec

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def encode_document(
    doc: Document,
    models: Mapping[Unit, TfidfModel],
    store: EmbeddingStore,
) -> DocRepSet:
    """Build the full representation set for one document."""
    sparse = {
        (section, unit): encode_sparse(doc, models[unit], section)
        for (section, unit) in SPARSE_KEYS
    }
    return DocRepSet(sparse=sparse, dense=store.get(doc.id), timestamp=doc.timestamp)


def cluster_from_doc(rep: DocRepSet, cluster_id: int, doc_id: str) -> ClusterRep:
    """A fresh singleton cluster whose aggregates equal the document's own."""
    return ClusterRep(
        id=cluster_id,
        size=1,
        sparse_mean=dict(rep.sparse),
        dense_mean=rep.dense.copy(),
        ts_min=rep.timestamp,
        ts_max=rep.timestamp,
        ts_mean_epoch=epoch_seconds(rep.timestamp),
        member_ids=(doc_id,),
    )


def _mean_sparse(mean: SparseVector, size: int, vec: SparseVector) -> SparseVector:
    """Incremental mean over the union support: (size*mean + vec) / (size+1)."""
    merged = {i: v * size for i, v in zip(mean.indices, mean.values)}
    for i, v in zip(vec.indices, vec.values):
        merged[i] = merged.get(i, 0.0) + v
    denom = size + 1
    return SparseVector.from_mapping({i: v / denom for i, v in merged.items()})


def fold_document(cluster: ClusterRep, rep: DocRepSet, doc_id: str) -> ClusterRep:
    """Fold one more document into a cluster, returning the new cluster value."""
    if doc_id in cluster.member_ids:
        raise DuplicateDocument(f"document {doc_id!r} already in cluster {cluster.id}")
    size = cluster.size
    if rep.dense.shape != cluster.dense_mean.shape:
        raise DimensionMismatch("document and cluster embedding dimensions differ")
    t = epoch_seconds(rep.timestamp)
    return ClusterRep(
        id=cluster.id,
        size=size + 1,
        sparse_mean={
            key: _mean_sparse(cluster.sparse_mean[key], size, rep.sparse[key])
            for key in SPARSE_KEYS
        },
        dense_mean=(size * cluster.dense_mean + rep.dense) / (size + 1),
        ts_min=min(cluster.ts_min, rep.timestamp),
        ts_max=max(cluster.ts_max, rep.timestamp),
        ts_mean_epoch=(size * cluster.ts_mean_epoch + t) / (size + 1),
        member_ids=cluster.member_ids + (doc_id,),
    )


def fit_all_units(corpus: list[Document]) -> dict[Unit, TfidfModel]:
    """Convenience: fit the three per-unit TF-IDF models."""
    return {unit: fit_tfidf(corpus, unit) for unit in Unit}
