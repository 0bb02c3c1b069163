"""Document-cluster similarity: per-representation values, the weighted
compatibility score, and argmax cluster selection."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .core import (
    SPARSE_KEYS,
    SECONDS_PER_DAY,
    ClusterRep,
    DocRepSet,
    SimilarityParams,
    SparseVector,
    epoch_seconds,
)
from .errors import DimensionMismatch, EmptyPool


def cosine_sparse(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity between sparse bags; 0 when either has zero norm."""
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return a.dot(b) / (na * nb)


def cosine_dense(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity between equal-dimension dense vectors; 0 on zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dense dimensions differ: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)


def _gaussian(delta_days: float, p: SimilarityParams) -> float:
    z = delta_days - p.mu
    return math.exp(-(z * z) / (2.0 * p.sigma * p.sigma))


def temporal_sim(doc_ts, cluster_ts, p: SimilarityParams) -> float:
    """Gaussian similarity of the day difference between two timestamps.

    exp(-(delta - mu)^2 / (2 sigma^2)) with delta = (doc - cluster) in
    fractional days; always in (0, 1], maximal at delta == mu.
    """
    delta = (epoch_seconds(doc_ts) - epoch_seconds(cluster_ts)) / SECONDS_PER_DAY
    return _gaussian(delta, p)


def similarity_vector(doc: DocRepSet, cluster: ClusterRep, p: SimilarityParams) -> np.ndarray:
    """The 13 document-cluster similarities in canonical feature order.

    The three temporal entries compare the single document timestamp against
    the cluster's min, max and mean timestamps.
    """
    if doc.dense.shape != cluster.dense_mean.shape:
        raise DimensionMismatch("document and cluster embedding dimensions differ")
    out = np.empty(13)
    for k, key in enumerate(SPARSE_KEYS):
        out[k] = cosine_sparse(doc.sparse[key], cluster.sparse_mean[key])
    out[9] = cosine_dense(doc.dense, cluster.dense_mean)
    t = epoch_seconds(doc.timestamp)
    out[10] = _gaussian((t - epoch_seconds(cluster.ts_min)) / SECONDS_PER_DAY, p)
    out[11] = _gaussian((t - epoch_seconds(cluster.ts_max)) / SECONDS_PER_DAY, p)
    out[12] = _gaussian((t - cluster.ts_mean_epoch) / SECONDS_PER_DAY, p)
    return out


def c_score(s: np.ndarray, w: np.ndarray) -> float:
    """Weighted sum of per-representation similarities (no bias term)."""
    return float(np.dot(np.asarray(s, dtype=np.float64), np.asarray(w, dtype=np.float64)))


def best_cluster(
    doc: DocRepSet,
    pool: Iterable[ClusterRep],
    w: np.ndarray,
    p: SimilarityParams,
) -> tuple[int, np.ndarray, float]:
    """The pool member with maximal c-score; ties go to the lowest cluster id."""
    best_id = None
    best_sim = None
    best_score = -math.inf
    for cluster in sorted(pool, key=lambda c: c.id):
        s = similarity_vector(doc, cluster, p)
        score = c_score(s, w)
        if score > best_score:
            best_id, best_sim, best_score = cluster.id, s, score
    if best_id is None:
        raise EmptyPool("cannot select a cluster from an empty pool")
    return best_id, best_sim, best_score
