"""Entity-aware document embeddings fine-tuned on event similarity, and an
exporter writing them in the stream-clustering engine's EmbeddingFile
format."""

from .corpus import Doc, load_corpus, load_spans
from .export import export_embeddings, write_embedding_file
from .masks import (
    DEFAULT_LABELS,
    EntitySpan,
    MisalignedSpan,
    build_entity_masks,
    canon_label,
)
from .mining import NoValidTriplet, Triplet, batch_hard_triplets, cosine_matrix
from .model import EntityAwareEncoder, encode_batch, encode_documents, token_limit
from .train import FinetuneConfig, finetune_event_similarity, triplet_hinge
