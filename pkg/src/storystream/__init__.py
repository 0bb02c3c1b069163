"""Online news-stream clustering: streaming documents are merged into an
ever-growing cluster pool by a weighted multi-representation similarity
score and a learned cluster-creation gate."""

from .core import (
    ClusterRep,
    DocRepSet,
    Document,
    FEATURE_LABELS,
    ModelBundle,
    N_FEATURES,
    SectionAnnotations,
    SectionKind,
    SimilarityParams,
    SparseVector,
    Unit,
    canonical_feature_order,
    feature_index,
)
from .engine import Assignment, ClusterPool, cluster_stream, step
from .errors import StoryStreamError
from .metrics import PRF, bcubed, ceaf, evaluate_all, muc
from .represent import (
    EmbeddingStore,
    TfidfModel,
    encode_document,
    fit_all_units,
    fit_tfidf,
)
from .similarity import best_cluster, c_score, similarity_vector, temporal_sim
from .training import (
    CreationNet,
    TrainConfig,
    cross_validate,
    train_bundle,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "ClusterPool",
    "ClusterRep",
    "CreationNet",
    "DocRepSet",
    "Document",
    "EmbeddingStore",
    "FEATURE_LABELS",
    "ModelBundle",
    "N_FEATURES",
    "PRF",
    "SectionAnnotations",
    "SectionKind",
    "SimilarityParams",
    "SparseVector",
    "StoryStreamError",
    "TfidfModel",
    "TrainConfig",
    "Unit",
    "bcubed",
    "best_cluster",
    "c_score",
    "canonical_feature_order",
    "ceaf",
    "cluster_stream",
    "cross_validate",
    "encode_document",
    "evaluate_all",
    "feature_index",
    "fit_all_units",
    "fit_tfidf",
    "muc",
    "similarity_vector",
    "step",
    "temporal_sim",
    "train_bundle",
]
