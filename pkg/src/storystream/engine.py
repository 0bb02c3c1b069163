"""Online clustering engine: one pass over the stream, one irrevocable
merge-or-create decision per document."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .core import ClusterRep, DocRepSet, Document, ModelBundle, stream_key, Unit
from .errors import ParseError
from .represent import (
    EmbeddingStore,
    TfidfModel,
    cluster_from_doc,
    encode_document,
    fold_document,
)
from .similarity import best_cluster


@dataclass
class ClusterPool:
    """Grow-only pool of cluster representations keyed by integer id."""

    clusters: dict[int, ClusterRep] = field(default_factory=dict)
    next_id: int = 0

    def __len__(self) -> int:
        return len(self.clusters)

    def ids(self) -> list[int]:
        return sorted(self.clusters)

    def add_new(self, rep: DocRepSet, doc_id: str) -> int:
        cid = self.next_id
        self.clusters[cid] = cluster_from_doc(rep, cid, doc_id)
        self.next_id += 1
        return cid

    def fold(self, cluster_id: int, rep: DocRepSet, doc_id: str) -> None:
        self.clusters[cluster_id] = fold_document(self.clusters[cluster_id], rep, doc_id)

    def membership(self) -> dict[str, str]:
        """Document id -> cluster id (as a string label) for evaluation."""
        return {
            doc_id: str(cid)
            for cid, cluster in self.clusters.items()
            for doc_id in cluster.member_ids
        }


@dataclass(frozen=True)
class Assignment:
    """Outcome of one engine step."""

    doc_id: str
    cluster_id: int
    created: bool
    c_score: float
    creation_prob: float


def step(
    pool: ClusterPool,
    doc: Document,
    bundle: ModelBundle,
    models: Mapping[Unit, TfidfModel],
    store: EmbeddingStore,
) -> tuple[ClusterPool, Assignment]:
    """Place one document: merge into the argmax-scoring cluster unless the
    creation net fires (p >= 0.5).  An empty pool always creates, reported
    with c_score 0 and creation probability 1.  Returns the updated pool
    (mutated in place) with the decision record."""
    rep = encode_document(doc, models, store)
    if not pool.clusters:
        cid = pool.add_new(rep, doc.id)
        return pool, Assignment(doc.id, cid, created=True, c_score=0.0, creation_prob=1.0)
    cid, sim, score = best_cluster(
        rep, pool.clusters.values(), bundle.weights, bundle.sim_params
    )
    prob = bundle.creation_net.predict(sim * bundle.mask_array())
    if prob >= 0.5:
        new_id = pool.add_new(rep, doc.id)
        return pool, Assignment(doc.id, new_id, created=True,
                                c_score=score, creation_prob=prob)
    pool.fold(cid, rep, doc.id)
    return pool, Assignment(doc.id, cid, created=False, c_score=score, creation_prob=prob)


def stream(
    pool: ClusterPool,
    docs: Sequence[Document],
    bundle: ModelBundle,
    models: Mapping[Unit, TfidfModel],
    store: EmbeddingStore,
) -> Iterator[Assignment]:
    """Feed documents to ``step`` in the given order, yielding assignments."""
    for doc in docs:
        _, assignment = step(pool, doc, bundle, models, store)
        yield assignment


def cluster_stream(
    docs: Sequence[Document],
    bundle: ModelBundle,
    models: Mapping[Unit, TfidfModel],
    store: EmbeddingStore,
    order: str = "timestamp",
) -> tuple[ClusterPool, list[Assignment]]:
    """Cluster a document collection in one pass.

    ``order`` is "timestamp" (sort by timestamp, id as tie-break) or "given"
    (caller-controlled order).
    """
    if order == "timestamp":
        docs = sorted(docs, key=stream_key)
    elif order != "given":
        raise ValueError("order must be 'timestamp' or 'given'")
    pool = ClusterPool()
    assignments = list(stream(pool, docs, bundle, models, store))
    return pool, assignments


def write_assignments(assignments: Sequence[Assignment], path) -> None:
    """TSV dump: doc_id, cluster_id, created, c_score, creation_prob."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tcluster_id\tcreated\tc_score\tcreation_prob\n")
        for a in assignments:
            fh.write(
                f"{a.doc_id}\t{a.cluster_id}\t{int(a.created)}\t"
                f"{a.c_score!r}\t{a.creation_prob!r}\n"
            )


def read_assignments(path) -> list[Assignment]:
    out: list[Assignment] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "doc_id\tcluster_id\tcreated\tc_score\tcreation_prob":
            raise ParseError("unrecognized assignment header", path=str(path), line=1)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 5:
                raise ParseError("ragged assignment row", path=str(path), line=lineno)
            try:
                out.append(
                    Assignment(
                        doc_id=parts[0],
                        cluster_id=int(parts[1]),
                        created=bool(int(parts[2])),
                        c_score=float(parts[3]),
                        creation_prob=float(parts[4]),
                    )
                )
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from exc
    return out


def pred_partition(assignments: Sequence[Assignment]) -> dict[str, str]:
    """Assignments -> document-to-cluster-label mapping for the metrics."""
    return {a.doc_id: str(a.cluster_id) for a in assignments}
