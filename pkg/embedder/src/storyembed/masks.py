"""Entity presence masks aligned to a tokenizer's output.

An external NER system supplies character-offset spans; a fast tokenizer
supplies per-token character offsets.  A token is flagged iff it overlaps
a span whose label is in the configured subset.  Special and padding
tokens carry empty (0, 0) offsets and are never flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

# Entity classes that actually carry event identity.  Counting-style labels
# (ORDINAL, CARDINAL, DATE, ...) are deliberately left out: they add noise,
# not signal, for story matching.
DEFAULT_LABELS = frozenset({
    "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC",
    "PRODUCT", "EVENT", "WORK_OF_ART", "LAW", "LANGUAGE",
})


class MisalignedSpan(Exception):
    """NER span does not fit inside the document it claims to annotate."""


def canon_label(label: str) -> str:
    """Normalize a label for subset membership: spaCy's WORK_OF_ART and a
    spelled-out "work of art" are the same class."""
    return label.strip().upper().replace(" ", "_")


@dataclass(frozen=True)
class EntitySpan:
    start: int  # character offsets, [start, end)
    end: int
    label: str


def build_entity_masks(
    text: str,
    token_offsets: Sequence[tuple[int, int]],
    spans: Iterable[EntitySpan | Sequence],
    label_subset: Iterable[str] = DEFAULT_LABELS,
) -> list[int]:
    """One 0/1 flag per token: does it overlap a kept-label entity span?

    ``token_offsets`` is a fast tokenizer's ``offset_mapping`` for this
    document.  The returned mask always has exactly one entry per token.
    """
    keep = {canon_label(lab) for lab in label_subset}
    flagged: list[EntitySpan] = []
    for raw in spans:
        span = raw if isinstance(raw, EntitySpan) else EntitySpan(int(raw[0]), int(raw[1]), str(raw[2]))
        if span.start < 0 or span.end > len(text) or span.start >= span.end:
            raise MisalignedSpan(
                f"span [{span.start}, {span.end}) outside document of length {len(text)}"
            )
        if canon_label(span.label) in keep:
            flagged.append(span)
    mask = []
    for t_start, t_end in token_offsets:
        hit = t_start < t_end and any(
            s.start < t_end and t_start < s.end for s in flagged
        )
        mask.append(int(hit))
    return mask
