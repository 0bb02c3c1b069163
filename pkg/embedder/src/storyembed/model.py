"""Entity-aware document encoder.

A transformer backbone (anything HF-style exposing ``get_input_embeddings``
and returning ``last_hidden_state``) plus a two-row presence/absence
embedding table.  The entity vector is added to the word embedding and the
sum goes in via ``inputs_embeds``, so it lands *before* the backbone's own
position/segment addition and layer norm — the standard input-embedding
composition.

Documents longer than the encoder's token limit are truncated (no sliding
window).  The document embedding is the mean over content tokens: padding
and special tokens do not participate, so a single-token document comes
out as exactly that token's contextual vector.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
from torch import nn

from .masks import build_entity_masks

_VERY_LARGE = 10**6  # tokenizers report a huge sentinel when no limit is set


class EntityAwareEncoder(nn.Module):

    def __init__(self, backbone, entity_aware: bool = True, init_std: float = 0.02):
        super().__init__()
        self.backbone = backbone
        self.entity_aware = entity_aware
        hidden = backbone.config.hidden_size
        # row 0 = absence (E_NE), row 1 = presence (E_E); both learned
        self.entity_embeddings = nn.Embedding(2, hidden)
        nn.init.normal_(self.entity_embeddings.weight, mean=0.0, std=init_std)

    @property
    def hidden_size(self) -> int:
        return self.backbone.config.hidden_size

    def forward(
        self,
        input_ids: torch.Tensor,
        attention_mask: torch.Tensor,
        entity_mask: torch.Tensor | None = None,
        pool_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        embeds = self.backbone.get_input_embeddings()(input_ids)
        if self.entity_aware:
            if entity_mask is None:
                entity_mask = torch.zeros_like(input_ids)
            embeds = embeds + self.entity_embeddings(entity_mask)
        hidden = self.backbone(
            inputs_embeds=embeds, attention_mask=attention_mask
        ).last_hidden_state
        weights = (pool_mask if pool_mask is not None else attention_mask)
        weights = weights.unsqueeze(-1).to(hidden.dtype)
        return (hidden * weights).sum(dim=1) / weights.sum(dim=1).clamp(min=1.0)


def token_limit(model: EntityAwareEncoder, tokenizer) -> int:
    limit = int(getattr(tokenizer, "model_max_length", _VERY_LARGE) or _VERY_LARGE)
    pos = int(getattr(model.backbone.config, "max_position_embeddings", limit))
    return min(limit, pos) if limit < _VERY_LARGE else pos


def encode_batch(
    model: EntityAwareEncoder,
    tokenizer,
    texts: Sequence[str],
    spans_per_text: Sequence | None = None,
    max_length: int | None = None,
    device=None,
) -> torch.Tensor:
    """Tokenize, align entity masks, run the encoder.  Gradients flow; wrap
    in ``torch.no_grad()`` (or use ``encode_documents``) for inference."""
    if max_length is None:
        max_length = token_limit(model, tokenizer)
    enc = tokenizer(
        list(texts),
        padding=True,
        truncation=True,
        max_length=max_length,
        return_special_tokens_mask=True,
        return_offsets_mapping=True,
        return_tensors="pt",
    )
    pool = enc["attention_mask"] * (1 - enc["special_tokens_mask"])
    entity = None
    if model.entity_aware and spans_per_text is not None:
        rows = []
        for text, offsets, spans in zip(texts, enc["offset_mapping"].tolist(), spans_per_text):
            rows.append(build_entity_masks(text, [tuple(o) for o in offsets], spans or ()))
        entity = torch.tensor(rows, dtype=torch.long)
    input_ids, attention = enc["input_ids"], enc["attention_mask"]
    if device is not None:
        input_ids, attention, pool = input_ids.to(device), attention.to(device), pool.to(device)
        entity = entity.to(device) if entity is not None else None
    return model(input_ids, attention, entity_mask=entity, pool_mask=pool)


def encode_documents(
    model: EntityAwareEncoder,
    tokenizer,
    docs: Sequence,
    spans_by_id: dict | None = None,
    batch_size: int = 32,
    max_length: int | None = None,
    device=None,
) -> np.ndarray:
    """Embed a document list (eval mode, no gradients), preserving order."""
    model.eval()
    chunks = []
    with torch.no_grad():
        for lo in range(0, len(docs), batch_size):
            batch = docs[lo : lo + batch_size]
            spans = None
            if spans_by_id is not None:
                spans = [spans_by_id.get(d.id, ()) for d in batch]
            emb = encode_batch(
                model, tokenizer, [d.text for d in batch], spans,
                max_length=max_length, device=device,
            )
            chunks.append(emb.cpu().numpy())
    if not chunks:
        return np.zeros((0, model.hidden_size), dtype=np.float32)
    return np.concatenate(chunks, axis=0)
