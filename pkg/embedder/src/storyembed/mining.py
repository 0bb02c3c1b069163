"""Batch-hard triplet mining.

Each document in a mini-batch is an anchor; its positive is the same-event
document it is *least* cosine-similar to, its negative the different-event
document it is *most* similar to.  Anchors lacking either side are skipped.
Ties break toward the lowest index so mining is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch


class NoValidTriplet(Exception):
    """Anchor has no same-label partner or no different-label partner."""


@dataclass(frozen=True)
class Triplet:
    anchor: int
    positive: int
    negative: int


def cosine_matrix(embeddings: torch.Tensor) -> torch.Tensor:
    normed = torch.nn.functional.normalize(embeddings, dim=1, eps=1e-12)
    return normed @ normed.T


def _hardest(sims_row: torch.Tensor, labels: Sequence, anchor: int) -> tuple[int, int]:
    same = [j for j, lab in enumerate(labels) if lab == labels[anchor] and j != anchor]
    diff = [j for j, lab in enumerate(labels) if lab != labels[anchor]]
    if not same or not diff:
        raise NoValidTriplet(f"anchor {anchor} has no usable positive/negative pair")
    pos = min(same, key=lambda j: (float(sims_row[j]), j))
    neg = max(diff, key=lambda j: (float(sims_row[j]), -j))
    return pos, neg


def batch_hard_triplets(embeddings: torch.Tensor, labels: Sequence) -> list[Triplet]:
    """Mine one (anchor, hardest positive, hardest negative) per usable anchor."""
    if embeddings.ndim != 2 or embeddings.shape[0] != len(labels):
        raise ValueError("need one label per embedding row")
    sims = cosine_matrix(embeddings)
    out: list[Triplet] = []
    for a in range(len(labels)):
        try:
            p, n = _hardest(sims[a], labels, a)
        except NoValidTriplet:
            continue
        out.append(Triplet(anchor=a, positive=p, negative=n))
    return out
