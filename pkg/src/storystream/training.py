"""Training pipeline: gold-stream simulation, triplet-to-SVM reduction for
the merge weights, SMOTE balancing, and the cluster-creation network."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .core import (
    N_FEATURES,
    ClusterRep,
    DocRepSet,
    Document,
    ModelBundle,
    SimilarityParams,
    stream_key,
    Unit,
)
from .errors import (
    DegenerateData,
    MissingGoldLabel,
    ParseError,
    TooFewClusters,
    TooFewMinority,
)
from .optim import lbfgs_minimize, svm_fit
from .represent import (
    EmbeddingStore,
    TfidfModel,
    cluster_from_doc,
    encode_document,
    fit_all_units,
    fold_document,
)
from .similarity import best_cluster, similarity_vector


# ---------------------------------------------------------------------------
# Training samples


@dataclass(frozen=True)
class SvmTripletSample:
    """Difference vector sim(a, pos) - sim(a, neg), possibly sign-flipped."""

    x: np.ndarray
    y: int

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise ValueError("sample features must be a finite 1-d vector")
        object.__setattr__(self, "x", x)
        if self.y not in (-1, 1):
            raise ValueError("SVM labels must be +1 or -1")


@dataclass(frozen=True)
class CreationSample:
    """Best-cluster similarity vector labeled 1 when a new cluster is due."""

    x: np.ndarray
    y: int

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise ValueError("sample features must be a finite 1-d vector")
        object.__setattr__(self, "x", x)
        if self.y not in (0, 1):
            raise ValueError("creation labels must be 0 or 1")


def save_samples(samples: Sequence[SvmTripletSample] | Sequence[CreationSample], path) -> None:
    """Write samples as TSV: feature_0..feature_{d-1}, label.  Floats use
    repr so a reload reproduces the exact values."""
    rows = list(samples)
    if not rows:
        raise DegenerateData("refusing to write an empty sample file")
    dim = rows[0].x.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        header = [f"feature_{i}" for i in range(dim)] + ["label"]
        fh.write("\t".join(header) + "\n")
        for s in rows:
            fields = [repr(float(v)) for v in s.x] + [str(s.y)]
            fh.write("\t".join(fields) + "\n")


def _load_samples(path) -> tuple[list[np.ndarray], list[int]]:
    xs: list[np.ndarray] = []
    ys: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("feature_0"):
            raise ParseError("missing sample header row", path=str(path), line=1)
        width = len(header.rstrip("\n").split("\t"))
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != width:
                raise ParseError("ragged sample row", path=str(path), line=lineno)
            try:
                xs.append(np.array([float(v) for v in parts[:-1]], dtype=np.float64))
                ys.append(int(parts[-1]))
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from exc
    return xs, ys


def load_svm_samples(path) -> list[SvmTripletSample]:
    xs, ys = _load_samples(path)
    return [SvmTripletSample(x=x, y=y) for x, y in zip(xs, ys)]


def load_creation_samples(path) -> list[CreationSample]:
    xs, ys = _load_samples(path)
    return [CreationSample(x=x, y=y) for x, y in zip(xs, ys)]


# ---------------------------------------------------------------------------
# Gold-stream simulation


@dataclass(frozen=True)
class TraceRecord:
    doc_id: str
    rep: DocRepSet
    gold: str
    gold_present: bool


class GoldStreamTrace:
    """Replayable record of an oracle run that files each document into its
    gold cluster in stream order."""

    def __init__(self, records: Sequence[TraceRecord]):
        self.records = list(records)

    def __len__(self) -> int:
        return len(self.records)

    def replay(self) -> Iterator[tuple[TraceRecord, dict[str, ClusterRep]]]:
        """Yield (record, pool-before-filing) pairs in stream order.

        The pool mapping is keyed by gold label and mutated in place after
        each yield, so consume it synchronously.
        """
        pool: dict[str, ClusterRep] = {}
        next_id = 0
        for rec in self.records:
            yield rec, pool
            cluster = pool.get(rec.gold)
            if cluster is None:
                pool[rec.gold] = cluster_from_doc(rec.rep, next_id, rec.doc_id)
                next_id += 1
            else:
                pool[rec.gold] = fold_document(cluster, rec.rep, rec.doc_id)

    def final_pool(self) -> dict[str, ClusterRep]:
        pool: dict[str, ClusterRep] = {}
        for _, pool in self.replay():
            pass
        return pool


def simulate_gold_stream(
    docs: Sequence[Document],
    models: Mapping[Unit, TfidfModel],
    store: EmbeddingStore,
) -> GoldStreamTrace:
    """Run the stream with gold labels, recording for every document its
    representation and whether its cluster already existed on arrival."""
    ordered = sorted(docs, key=stream_key)
    seen: set[str] = set()
    records: list[TraceRecord] = []
    for doc in ordered:
        if doc.gold_cluster is None:
            raise MissingGoldLabel(f"document {doc.id!r} has no gold cluster")
        rep = encode_document(doc, models, store)
        records.append(
            TraceRecord(
                doc_id=doc.id,
                rep=rep,
                gold=doc.gold_cluster,
                gold_present=doc.gold_cluster in seen,
            )
        )
        seen.add(doc.gold_cluster)
    return GoldStreamTrace(records)


# ---------------------------------------------------------------------------
# Triplet sampling and the SVM reduction


def make_svm_triplets(
    trace: GoldStreamTrace,
    params: SimilarityParams,
    rng_seed: int = 0,
    hard_negatives: bool = False,
) -> list[SvmTripletSample]:
    """Build rank-SVM samples from the gold-stream trace.

    For each document whose gold cluster is already in the pool alongside at
    least one other cluster, the sample is sim(doc, gold) - sim(doc, other).
    Negatives are drawn uniformly unless ``hard_negatives``, which picks the
    competing cluster with the largest summed similarity.  All samples start
    as class +1; exactly half (floor) are then negated to class -1.
    """
    rng = np.random.default_rng(rng_seed)
    samples: list[SvmTripletSample] = []
    for rec, pool in trace.replay():
        if not rec.gold_present or len(pool) < 2:
            continue
        pos = similarity_vector(rec.rep, pool[rec.gold], params)
        others = sorted(label for label in pool if label != rec.gold)
        if hard_negatives:
            scored = [
                (float(similarity_vector(rec.rep, pool[label], params).sum()), label)
                for label in others
            ]
            neg_label = max(scored, key=lambda t: (t[0], t[1]))[1]
        else:
            neg_label = others[int(rng.integers(len(others)))]
        neg = similarity_vector(rec.rep, pool[neg_label], params)
        samples.append(SvmTripletSample(x=pos - neg, y=1))
    flip = rng.permutation(len(samples))[: len(samples) // 2]
    for i in flip:
        samples[int(i)] = SvmTripletSample(x=-samples[int(i)].x, y=-1)
    return samples


def train_linear_svm(samples: Sequence[SvmTripletSample], C: float = 1.0) -> np.ndarray:
    """Fit the merge-weight vector; the SVM bias is discarded because the
    downstream score is a pure dot product."""
    if not samples:
        raise DegenerateData("no SVM samples to train on")
    X = np.stack([s.x for s in samples])
    y = np.array([s.y for s in samples], dtype=np.float64)
    w, _ = svm_fit(X, y, C)
    if not np.any(w):
        raise DegenerateData("SVM training produced an all-zero weight vector")
    return w


# ---------------------------------------------------------------------------
# Creation samples and SMOTE


def make_creation_samples(
    trace: GoldStreamTrace,
    weights: np.ndarray,
    params: SimilarityParams,
) -> list[CreationSample]:
    """Label each document's best-cluster similarity vector with whether a
    new cluster should have been opened (1) or the stream already held its
    gold cluster (0)."""
    samples: list[CreationSample] = []
    for rec, pool in trace.replay():
        if not pool:
            continue
        _, sim, _ = best_cluster(rec.rep, pool.values(), weights, params)
        samples.append(CreationSample(x=sim, y=0 if rec.gold_present else 1))
    return samples


def smote_oversample(
    samples: Sequence[CreationSample],
    k: int = 5,
    rng_seed: int = 0,
) -> list[CreationSample]:
    """Oversample the minority class by interpolating between each drawn
    minority point and one of its k nearest minority neighbours, until both
    classes have equal counts.  Majority samples pass through untouched."""
    if k < 1:
        raise ValueError("k must be at least 1")
    rows = list(samples)
    counts = {0: 0, 1: 0}
    for s in rows:
        counts[s.y] += 1
    if counts[0] == 0 or counts[1] == 0:
        raise DegenerateData("SMOTE needs both classes present")
    if counts[0] == counts[1]:
        return rows
    minority = 0 if counts[0] < counts[1] else 1
    deficit = abs(counts[0] - counts[1])
    min_rows = [s for s in rows if s.y == minority]
    if len(min_rows) < 2:
        raise TooFewMinority(
            f"SMOTE needs at least 2 minority samples, got {len(min_rows)}"
        )
    Xm = np.stack([s.x for s in min_rows])
    k_eff = min(k, len(min_rows) - 1)
    d2 = ((Xm[:, None, :] - Xm[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k_eff]
    rng = np.random.default_rng(rng_seed)
    out = rows
    for _ in range(deficit):
        i = int(rng.integers(len(min_rows)))
        j = int(neighbors[i][int(rng.integers(k_eff))])
        u = float(rng.random())
        out.append(CreationSample(x=Xm[i] + u * (Xm[j] - Xm[i]), y=minority))
    return out


# ---------------------------------------------------------------------------
# Creation network


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(eq=False)
class CreationNet:
    """Tiny feed-forward scorer: logistic hidden layer, logistic output."""

    w1: np.ndarray  # (hidden, in)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float

    def __post_init__(self) -> None:
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = float(self.b2)
        h, d = self.w1.shape
        if self.b1.shape != (h,) or self.w2.shape != (h,):
            raise ValueError("creation net layer shapes do not line up")
        if d < 1 or h < 1:
            raise ValueError("creation net needs at least one input and hidden unit")

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[1]

    def predict(self, x: np.ndarray) -> float:
        """Probability that a new cluster should be created."""
        x = np.asarray(x, dtype=np.float64)
        hidden = _sigmoid(self.w1 @ x + self.b1)
        return float(_sigmoid(np.array(self.w2 @ hidden + self.b2)))

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        hidden = _sigmoid(X @ self.w1.T + self.b1)
        return _sigmoid(hidden @ self.w2 + self.b2)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def unpack(cls, theta: np.ndarray, hidden: int, n_inputs: int) -> "CreationNet":
        theta = np.asarray(theta, dtype=np.float64)
        sizes = hidden * n_inputs, hidden, hidden, 1
        if theta.shape != (sum(sizes),):
            raise ValueError("parameter vector has the wrong length")
        w1, b1, w2, b2 = np.split(theta, np.cumsum(sizes)[:-1])
        return cls(w1=w1.reshape(hidden, n_inputs), b1=b1, w2=w2, b2=float(b2[0]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CreationNet):
            return NotImplemented
        return (
            self.w1.shape == other.w1.shape
            and np.array_equal(self.w1, other.w1)
            and np.array_equal(self.b1, other.b1)
            and np.array_equal(self.w2, other.w2)
            and self.b2 == other.b2
        )


def _net_objective(theta, X, y, hidden, l2):
    n_inputs = X.shape[1]
    n = X.shape[0]
    sizes = hidden * n_inputs, hidden, hidden, 1
    w1_flat, b1, w2, b2 = np.split(theta, np.cumsum(sizes)[:-1])
    w1 = w1_flat.reshape(hidden, n_inputs)
    z1 = X @ w1.T + b1
    h = _sigmoid(z1)
    z2 = h @ w2 + b2[0]
    # BCE through the logit: softplus(z) - y z, numerically stable
    loss = float(np.mean(np.logaddexp(0.0, z2) - y * z2))
    loss += l2 * float(np.dot(theta, theta))
    p = _sigmoid(z2)
    dz2 = (p - y) / n
    dw2 = h.T @ dz2
    db2 = float(dz2.sum())
    dh = np.outer(dz2, w2)
    dz1 = dh * h * (1.0 - h)
    dw1 = dz1.T @ X
    db1 = dz1.sum(axis=0)
    grad = np.concatenate([dw1.ravel(), db1, dw2, [db2]]) + 2.0 * l2 * theta
    return loss, grad


def train_creation_net(
    samples: Sequence[CreationSample],
    rng_seed: int = 0,
    hidden: int = 2,
    l2: float = 1e-4,
    restarts: int = 5,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> CreationNet:
    """Fit the creation scorer by minimizing L2-regularized mean binary
    cross-entropy with L-BFGS, keeping the best of several seeded restarts."""
    if not samples:
        raise DegenerateData("no creation samples to train on")
    X = np.stack([s.x for s in samples])
    y = np.array([s.y for s in samples], dtype=np.float64)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise DegenerateData("creation training needs both merge and create examples")
    n_inputs = X.shape[1]
    n_params = hidden * n_inputs + hidden + hidden + 1
    rng = np.random.default_rng(rng_seed)
    best_theta = None
    best_loss = math.inf
    for _ in range(max(1, restarts)):
        theta0 = rng.normal(0.0, 0.5, size=n_params)
        theta = lbfgs_minimize(
            lambda t: _net_objective(t, X, y, hidden, l2),
            theta0,
            tol=tol,
            max_iter=max_iter,
        )
        loss, _ = _net_objective(theta, X, y, hidden, l2)
        if loss < best_loss:
            best_loss = loss
            best_theta = theta
    assert best_theta is not None
    return CreationNet.unpack(best_theta, hidden, n_inputs)


# ---------------------------------------------------------------------------
# End-to-end training and model selection


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters for one end-to-end training run."""

    svm_c: float = 1.0
    mu: float = 0.0
    sigma: float = 3.0
    smote_k: int = 5
    hard_negatives: bool = False
    feature_mask: tuple[bool, ...] | None = None

    def mask_tuple(self) -> tuple[bool, ...]:
        if self.feature_mask is None:
            return tuple([True] * N_FEATURES)
        if len(self.feature_mask) != N_FEATURES:
            raise ValueError(f"feature mask must have {N_FEATURES} entries")
        return tuple(bool(v) for v in self.feature_mask)


def default_grid() -> list[TrainConfig]:
    """The model-selection grid: C in {0.1, 1, 10} x sigma in {1, 3, 7, 14}."""
    return [
        TrainConfig(svm_c=c, mu=0.0, sigma=s)
        for c in (0.1, 1.0, 10.0)
        for s in (1.0, 3.0, 7.0, 14.0)
    ]


def train_bundle(
    docs: Sequence[Document],
    store: EmbeddingStore,
    config: TrainConfig = TrainConfig(),
    rng_seed: int = 0,
    models: Mapping[Unit, TfidfModel] | None = None,
) -> ModelBundle:
    """Run the full training pipeline on gold-labeled documents.

    Stages: gold-stream simulation, triplet sampling, SVM weight fit,
    creation-sample extraction, SMOTE balancing, creation-net fit.  TF-IDF
    models default to fitting on ``docs`` but can be supplied (e.g. fitted
    on a superset corpus, or loaded from precomputed weights).
    """
    if models is None:
        models = fit_all_units(docs)
    params = SimilarityParams(mu=config.mu, sigma=config.sigma)
    mask = config.mask_tuple()
    mask_arr = np.array(mask, dtype=np.float64)
    trace = simulate_gold_stream(docs, models, store)
    triplets = make_svm_triplets(
        trace, params, rng_seed=rng_seed, hard_negatives=config.hard_negatives
    )
    if not all(mask):
        triplets = [dataclasses.replace(t, x=t.x * mask_arr) for t in triplets]
    weights = train_linear_svm(triplets, C=config.svm_c) * mask_arr
    if not np.any(weights):
        raise DegenerateData("all surviving merge weights are zero")
    creation = make_creation_samples(trace, weights, params)
    if not all(mask):
        creation = [dataclasses.replace(s, x=s.x * mask_arr) for s in creation]
    balanced = smote_oversample(creation, k=config.smote_k, rng_seed=rng_seed + 1)
    net = train_creation_net(balanced, rng_seed=rng_seed + 2)
    return ModelBundle(
        weights=weights,
        creation_net=net,
        sim_params=params,
        embedding_dim=store.dim,
        feature_mask=mask,
    )


@dataclass(frozen=True)
class CvResult:
    config: TrainConfig
    mean_f1: float
    fold_f1s: tuple[float, ...]


def cross_validate(
    docs: Sequence[Document],
    store: EmbeddingStore,
    grid: Sequence[TrainConfig] | None = None,
    folds: int = 5,
    rng_seed: int = 0,
    models: Mapping[Unit, TfidfModel] | None = None,
) -> tuple[TrainConfig, list[CvResult]]:
    """Grid search by k-fold cross-validation over gold *clusters*.

    Entire clusters are held out together so validation streams contain
    unseen events.  Each grid point is scored by the mean validation B-Cubed
    F1 across folds; the best (first on ties) is returned with the full
    result table.  Folds whose training half degenerates (e.g. too few
    minority samples for SMOTE) score 0 for that grid point.
    """
    from .engine import cluster_stream  # local import to avoid a cycle
    from .metrics import bcubed

    if grid is None:
        grid = default_grid()
    grid = list(grid)
    if not grid:
        raise ValueError("the hyper-parameter grid is empty")
    for doc in docs:
        if doc.gold_cluster is None:
            raise MissingGoldLabel(f"document {doc.id!r} has no gold cluster")
    labels = sorted({doc.gold_cluster for doc in docs})
    if len(labels) < folds:
        raise TooFewClusters(
            f"{folds}-fold split needs at least {folds} gold clusters, got {len(labels)}"
        )
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(len(labels))
    fold_of: dict[str, int] = {labels[int(j)]: i % folds for i, j in enumerate(order)}
    if models is None:
        models = fit_all_units(docs)
    results: list[CvResult] = []
    for config in grid:
        fold_f1s: list[float] = []
        for f in range(folds):
            fit_docs = [d for d in docs if fold_of[d.gold_cluster] != f]
            val_docs = [d for d in docs if fold_of[d.gold_cluster] == f]
            try:
                bundle = train_bundle(
                    fit_docs, store, config, rng_seed=rng_seed + 100 + f, models=models
                )
            except DegenerateData:
                fold_f1s.append(0.0)
                continue
            _, assignments = cluster_stream(val_docs, bundle, models, store)
            pred = {a.doc_id: str(a.cluster_id) for a in assignments}
            gold = {d.id: d.gold_cluster for d in val_docs}
            fold_f1s.append(bcubed(pred, gold).f1)
        results.append(
            CvResult(config=config, mean_f1=float(np.mean(fold_f1s)), fold_f1s=tuple(fold_f1s))
        )
    best = max(results, key=lambda r: r.mean_f1)
    return best.config, results
