import pytest

from storyembed import (
    DEFAULT_LABELS,
    EntitySpan,
    MisalignedSpan,
    build_entity_masks,
    canon_label,
)


def _offsets(kit, text):
    enc = kit.tokenizer(text, return_offsets_mapping=True)
    return enc["offset_mapping"]


def test_no_entities_gives_all_zero_mask(kit):
    text = "storm hits genoa port today"
    offsets = _offsets(kit, text)
    mask = build_entity_masks(text, offsets, [])
    assert mask == [0] * len(offsets)


def test_span_flags_exactly_the_covered_tokens(kit):
    text = "storm hits genoa port today"
    offsets = _offsets(kit, text)
    # one token per word here: [CLS] storm hits genoa port today [SEP]
    assert len(offsets) == 7
    span = EntitySpan(start=text.index("genoa"), end=text.index("port") + len("port"), label="GPE")
    mask = build_entity_masks(text, offsets, [span])
    assert mask == [0, 0, 0, 1, 1, 0, 0]


def test_partial_overlap_still_flags_the_token(kit):
    text = "storm hits genoa port today"
    offsets = _offsets(kit, text)
    # span covering only the middle of "genoa"
    start = text.index("genoa") + 1
    mask = build_entity_masks(text, offsets, [EntitySpan(start, start + 2, "GPE")])
    assert mask == [0, 0, 0, 1, 0, 0, 0]


def test_ordinal_and_cardinal_are_ignored_by_default(kit):
    text = "one third reached genoa"
    offsets = _offsets(kit, text)
    spans = [
        EntitySpan(0, 3, "CARDINAL"),
        EntitySpan(4, 9, "ORDINAL"),
        EntitySpan(text.index("genoa"), text.index("genoa") + 5, "GPE"),
    ]
    mask = build_entity_masks(text, offsets, spans)
    assert mask == [0, 0, 0, 0, 1, 0]
    assert "ORDINAL" not in DEFAULT_LABELS and "CARDINAL" not in DEFAULT_LABELS


def test_label_normalization_spaces_vs_underscores(kit):
    text = "storm hits genoa"
    offsets = _offsets(kit, text)
    for label in ("WORK_OF_ART", "WORK OF ART", "work of art"):
        mask = build_entity_masks(text, offsets, [EntitySpan(0, 5, label)])
        assert mask[1] == 1, label
    assert canon_label("Work of Art") == "WORK_OF_ART"


def test_custom_label_subset(kit):
    text = "storm hits genoa"
    offsets = _offsets(kit, text)
    span = [EntitySpan(0, 5, "GPE")]
    assert build_entity_masks(text, offsets, span, label_subset={"PERSON"}) == [0] * len(offsets)
    assert build_entity_masks(text, offsets, span, label_subset={"GPE"})[1] == 1


def test_misaligned_spans_raise(kit):
    text = "storm hits genoa"
    offsets = _offsets(kit, text)
    for bad in (EntitySpan(-1, 3, "GPE"), EntitySpan(0, len(text) + 1, "GPE"),
                EntitySpan(5, 5, "GPE"), EntitySpan(7, 3, "GPE")):
        with pytest.raises(MisalignedSpan):
            build_entity_masks(text, offsets, [bad])


def test_tuple_spans_accepted(kit):
    text = "storm hits genoa"
    offsets = _offsets(kit, text)
    assert build_entity_masks(text, offsets, [(0, 5, "GPE")])[1] == 1


def test_mask_length_invariant_holds_for_every_document(kit):
    # including wordpiece splits, truncation, and special tokens (never set)
    texts = [d.text for d in kit.docs] + [
        "storms hits genoa " * 20,  # forces truncation at the token limit
        "",
    ]
    for text in texts:
        enc = kit.tokenizer(text, truncation=True, return_offsets_mapping=True,
                            return_special_tokens_mask=True)
        offsets = enc["offset_mapping"]
        mask = build_entity_masks(text, offsets, [EntitySpan(0, max(len(text), 1), "ORG")]
                                  if text else [])
        assert len(mask) == len(offsets) == len(enc["input_ids"])
        for flag, special in zip(mask, enc["special_tokens_mask"]):
            if special:
                assert flag == 0
