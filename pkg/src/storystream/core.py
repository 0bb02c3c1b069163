"""Domain types for the stream clustering engine.

Documents carry three text sections (title, body, title+body), each annotated
with tokens, lemmas and entities.  A document is represented by 9 sparse
TF-IDF bags (3 sections x 3 units), one dense embedding and one timestamp;
clusters aggregate member documents by mean pooling and keep min/max/mean
timestamps, so a document-cluster comparison yields 13 similarity values in a
fixed canonical order.

All types are immutable values; cluster updates produce new values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

if TYPE_CHECKING:  # avoids a runtime cycle; CreationNet lives with the trainers
    from .training import CreationNet


class SectionKind(str, Enum):
    TITLE = "title"
    BODY = "body"
    TITLEBODY = "titlebody"


class Unit(str, Enum):
    TOKEN = "tok"
    LEMMA = "lem"
    ENTITY = "ent"


SECTIONS = (SectionKind.TITLE, SectionKind.BODY, SectionKind.TITLEBODY)
UNITS = (Unit.TOKEN, Unit.LEMMA, Unit.ENTITY)

#: (section, unit) keys of the nine sparse bags, in canonical feature order.
SPARSE_KEYS = tuple((section, unit) for unit in UNITS for section in SECTIONS)

FEATURE_LABELS = tuple(
    [f"{unit.value}/{section.value}" for unit in UNITS for section in SECTIONS]
    + ["dense", "ts_min", "ts_max", "ts_mean"]
)

N_FEATURES = len(FEATURE_LABELS)  # 13

DENSE_INDEX = FEATURE_LABELS.index("dense")
TS_MIN_INDEX = FEATURE_LABELS.index("ts_min")
TS_MAX_INDEX = FEATURE_LABELS.index("ts_max")
TS_MEAN_INDEX = FEATURE_LABELS.index("ts_mean")


def canonical_feature_order() -> tuple[str, ...]:
    """The fixed 13-feature ordering shared by every producer and consumer.

    Nine sparse cosines (unit-major: tok, lem, ent; section order title,
    body, titlebody), then the dense cosine, then the three temporal
    similarities against the cluster's min, max and mean timestamps.
    """
    return FEATURE_LABELS


def feature_index(label: str) -> int:
    """Position of ``label`` in the canonical order."""
    return FEATURE_LABELS.index(label)


_EPOCH = datetime(1970, 1, 1)
SECONDS_PER_DAY = 86400.0


def epoch_seconds(ts: datetime) -> float:
    """Seconds since 1970-01-01 on a timezone-free axis (naive datetimes)."""
    return (ts - _EPOCH).total_seconds()


def datetime_from_epoch(seconds: float) -> datetime:
    """Inverse of :func:`epoch_seconds`, rounded to the nearest second."""
    return _EPOCH + timedelta(seconds=round(seconds))


def round_to_second(ts: datetime) -> datetime:
    """Timestamps are stored at second resolution; round sub-second parts."""
    if ts.microsecond == 0:
        return ts
    base = ts.replace(microsecond=0)
    if ts.microsecond >= 500_000:
        base += timedelta(seconds=1)
    return base


def stream_key(doc: "Document") -> tuple[datetime, str]:
    """Stream order is (timestamp, id); the id breaks timestamp ties."""
    return (doc.timestamp, doc.id)


@dataclass(frozen=True)
class SectionAnnotations:
    """Token, lemma and entity lists for one text section (may be empty)."""

    tokens: tuple[str, ...] = ()
    lemmas: tuple[str, ...] = ()
    entities: tuple[str, ...] = ()

    def terms(self, unit: Unit) -> tuple[str, ...]:
        if unit is Unit.TOKEN:
            return self.tokens
        if unit is Unit.LEMMA:
            return self.lemmas
        return self.entities

    @staticmethod
    def concat(a: "SectionAnnotations", b: "SectionAnnotations") -> "SectionAnnotations":
        return SectionAnnotations(
            tokens=a.tokens + b.tokens,
            lemmas=a.lemmas + b.lemmas,
            entities=a.entities + b.entities,
        )


@dataclass(frozen=True)
class Document:
    """A news article with annotations; immutable once constructed."""

    id: str
    title: str
    body: str
    timestamp: datetime
    sections: Mapping[SectionKind, SectionAnnotations]
    gold_cluster: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")
        missing = [s for s in SECTIONS if s not in self.sections]
        if missing:
            raise ValueError(f"document {self.id!r} missing sections {missing}")
        object.__setattr__(self, "timestamp", round_to_second(self.timestamp))

    @classmethod
    def build(
        cls,
        id: str,
        title: str,
        body: str,
        timestamp: datetime,
        title_ann: SectionAnnotations,
        body_ann: SectionAnnotations,
        titlebody_ann: SectionAnnotations | None = None,
        gold_cluster: str | None = None,
    ) -> "Document":
        """Construct a document, deriving title+body annotations by
        concatenation when they are not supplied."""
        if titlebody_ann is None:
            titlebody_ann = SectionAnnotations.concat(title_ann, body_ann)
        sections = {
            SectionKind.TITLE: title_ann,
            SectionKind.BODY: body_ann,
            SectionKind.TITLEBODY: titlebody_ann,
        }
        return cls(id=id, title=title, body=body, timestamp=timestamp,
                   sections=sections, gold_cluster=gold_cluster)


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse vector; no explicit zeros, all values finite."""

    indices: tuple[int, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must have equal length")
        prev = -1
        for i in self.indices:
            if i <= prev or i < 0:
                raise ValueError("indices must be strictly increasing and non-negative")
            prev = i
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError("values must be finite")

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float]) -> "SparseVector":
        items = sorted((i, float(v)) for i, v in mapping.items() if v != 0.0)
        if not items:
            return cls()
        idx, vals = zip(*items)
        return cls(indices=idx, values=vals)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices, self.values))

    def dot(self, other: "SparseVector") -> float:
        # merge over sorted indices
        acc = 0.0
        i, j = 0, 0
        a_idx, a_val = self.indices, self.values
        b_idx, b_val = other.indices, other.values
        while i < len(a_idx) and j < len(b_idx):
            ai, bj = a_idx[i], b_idx[j]
            if ai == bj:
                acc += a_val[i] * b_val[j]
                i += 1
                j += 1
            elif ai < bj:
                i += 1
            else:
                j += 1
        return acc

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))

    def __len__(self) -> int:
        return len(self.indices)


def as_dense(values: Iterable[float] | np.ndarray) -> np.ndarray:
    """Validate and return a 1-D float64 dense vector."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("dense vector must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError("dense vector must be finite")
    return arr


@dataclass(frozen=True)
class DocRepSet:
    """The 11 document representations: 9 sparse bags, 1 dense vector, 1 timestamp."""

    sparse: Mapping[tuple[SectionKind, Unit], SparseVector]
    dense: np.ndarray
    timestamp: datetime

    def __post_init__(self):
        if set(self.sparse.keys()) != set(SPARSE_KEYS):
            raise ValueError("sparse map must contain exactly the 9 (section, unit) entries")
        object.__setattr__(self, "dense", as_dense(self.dense))


@dataclass(frozen=True)
class ClusterRep:
    """Aggregated cluster state: mean-pooled vectors plus timestamp pooling.

    The mean timestamp is kept as a float epoch internally so repeated folds
    do not accumulate rounding error; ``ts_mean`` exposes it at second
    resolution.
    """

    id: int
    size: int
    sparse_mean: Mapping[tuple[SectionKind, Unit], SparseVector]
    dense_mean: np.ndarray
    ts_min: datetime
    ts_max: datetime
    ts_mean_epoch: float
    member_ids: tuple[str, ...]

    def __post_init__(self):
        if self.size < 1 or self.size != len(self.member_ids):
            raise ValueError("cluster size must equal member count and be >= 1")
        if set(self.sparse_mean.keys()) != set(SPARSE_KEYS):
            raise ValueError("sparse_mean must contain exactly the 9 (section, unit) entries")
        object.__setattr__(self, "dense_mean", as_dense(self.dense_mean))
        lo, hi = epoch_seconds(self.ts_min), epoch_seconds(self.ts_max)
        if not (lo - 1e-6 <= self.ts_mean_epoch <= hi + 1e-6):
            raise ValueError("ts_mean must lie between ts_min and ts_max")

    @property
    def ts_mean(self) -> datetime:
        return datetime_from_epoch(self.ts_mean_epoch)


@dataclass(frozen=True)
class SimilarityParams:
    """Hyper-parameters of the Gaussian temporal similarity (units: days)."""

    mu: float = 0.0
    sigma: float = 3.0

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise ValueError("sigma must be positive")


def check_similarity_vector(s: np.ndarray) -> np.ndarray:
    """Validate the 13-entry similarity vector range invariants."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (N_FEATURES,):
        raise ValueError(f"similarity vector must have {N_FEATURES} entries")
    if not np.all(np.isfinite(s)):
        raise ValueError("similarity vector must be finite")
    cos = s[: DENSE_INDEX + 1]
    if np.any(cos < -1.0 - 1e-12) or np.any(cos > 1.0 + 1e-12):
        raise ValueError("cosine entries must lie in [-1, 1]")
    temporal = s[TS_MIN_INDEX:]
    if np.any(temporal <= 0.0) or np.any(temporal > 1.0 + 1e-12):
        raise ValueError("temporal entries must lie in (0, 1]")
    return s


def check_weights(w: np.ndarray) -> np.ndarray:
    """Validate a 13-entry weight vector (finite, at least one nonzero)."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (N_FEATURES,):
        raise ValueError(f"weight vector must have {N_FEATURES} entries")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if not np.any(w != 0.0):
        raise ValueError("weight vector must have at least one nonzero entry")
    return w


BUNDLE_FORMAT_VERSION = 1


@dataclass(eq=False)
class ModelBundle:
    """Everything needed to run the clustering engine, persistable as a unit."""

    weights: np.ndarray
    creation_net: "CreationNet"
    sim_params: SimilarityParams
    embedding_dim: int
    feature_mask: tuple[bool, ...] = field(default_factory=lambda: (True,) * N_FEATURES)
    format_version: int = BUNDLE_FORMAT_VERSION

    def __post_init__(self):
        self.weights = check_weights(self.weights)
        self.feature_mask = tuple(bool(b) for b in self.feature_mask)
        if len(self.feature_mask) != N_FEATURES:
            raise ValueError(f"feature_mask must have {N_FEATURES} entries")
        if self.embedding_dim < 1:
            raise ValueError("embedding_dim must be positive")

    def mask_array(self) -> np.ndarray:
        return np.asarray(self.feature_mask, dtype=np.float64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelBundle):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.creation_net == other.creation_net
            and self.sim_params == other.sim_params
            and self.embedding_dim == other.embedding_dim
            and self.feature_mask == other.feature_mask
            and self.format_version == other.format_version
        )
