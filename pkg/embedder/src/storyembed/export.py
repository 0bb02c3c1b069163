"""EmbeddingFile writer.

The clustering engine's binary vector format, reproduced here standalone
(this package deliberately does not import the engine): little-endian
header ``SSEM`` + version + dim + count, then per record a u16 id length,
the UTF-8 id, and dim float32 values.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import struct

from .model import EntityAwareEncoder, encode_documents

EMBEDDING_MAGIC = b"SSEM"
EMBEDDING_VERSION = 1
_HEADER = struct.Struct("<4sIII")  # magic, version, dim, count
_ID_LEN = struct.Struct("<H")


def write_embedding_file(path, ids: Sequence[str], vectors) -> None:
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise ValueError("need one vector row per document id")
    if vectors.shape[1] < 1:
        raise ValueError("embedding dimension must be at least 1")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate document ids")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION,
                              vectors.shape[1], len(ids)))
        for doc_id, row in zip(ids, vectors):
            raw = str(doc_id).encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"document id too long to serialize: {doc_id!r}")
            fh.write(_ID_LEN.pack(len(raw)))
            fh.write(raw)
            fh.write(row.tobytes())


def export_embeddings(
    model: EntityAwareEncoder,
    tokenizer,
    docs: Sequence,
    out_path,
    spans_by_id: dict | None = None,
    batch_size: int = 32,
    max_length: int | None = None,
    device=None,
) -> np.ndarray:
    """Embed ``docs`` (eval mode) and write them; returns the matrix too."""
    vectors = encode_documents(
        model, tokenizer, docs, spans_by_id=spans_by_id,
        batch_size=batch_size, max_length=max_length, device=device,
    )
    write_embedding_file(out_path, [d.id for d in docs], vectors)
    return vectors
