import numpy as np
import torch

from storyembed import (
    Doc,
    EntitySpan,
    encode_batch,
    encode_documents,
    token_limit,
)


def test_single_token_document_is_that_tokens_vector(kit):
    # mean pooling over content tokens: with one content token the document
    # embedding must equal that token's contextual vector exactly.
    model = kit.make_model(seed=0)
    model.eval()
    enc = kit.tokenizer("storm", return_special_tokens_mask=True, return_tensors="pt")
    assert int(enc["special_tokens_mask"].sum()) == 2  # [CLS] ... [SEP]
    with torch.no_grad():
        pooled = encode_batch(model, kit.tokenizer, ["storm"])
        embeds = model.backbone.get_input_embeddings()(enc["input_ids"])
        embeds = embeds + model.entity_embeddings(torch.zeros_like(enc["input_ids"]))
        hidden = model.backbone(
            inputs_embeds=embeds, attention_mask=enc["attention_mask"]
        ).last_hidden_state
    assert torch.equal(pooled[0], hidden[0, 1])


def test_long_document_truncates_at_token_limit(kit):
    model = kit.make_model(seed=0)
    assert token_limit(model, kit.tokenizer) == 24
    long_doc = Doc(id="long", text="storm hits genoa " * 50)
    out = encode_documents(model, kit.tokenizer, [long_doc])
    assert out.shape == (1, 32)
    assert np.all(np.isfinite(out))


def test_entity_flags_change_the_embedding(kit):
    model = kit.make_model(seed=0)
    model.eval()
    doc = Doc(id="d", text="fire crews reached genoa on monday")
    span = {"d": [EntitySpan(doc.text.index("genoa"), doc.text.index("genoa") + 5, "GPE")]}
    with_flag = encode_documents(model, kit.tokenizer, [doc], spans_by_id=span)
    without = encode_documents(model, kit.tokenizer, [doc], spans_by_id={})
    assert not np.allclose(with_flag, without)

    # absence rows are a learned vector too, so an entity-aware encoder with
    # no spans still differs from the plain backbone
    plain = kit.make_model(seed=0, entity_aware=False)
    plain.eval()
    assert not np.allclose(without, encode_documents(plain, kit.tokenizer, [doc]))


def test_entity_table_initialized_near_zero(kit):
    weights = kit.make_model(seed=3).entity_embeddings.weight.detach()
    assert float(weights.abs().max()) < 0.2  # N(0, 0.02^2) draws
    assert float(weights.std()) < 0.05


def test_batch_equals_one_by_one_encoding(kit):
    # padding must not leak into the pooled vectors
    model = kit.make_model(seed=1)
    texts = ["storm", "storm hits genoa port today", "fire crews reached genoa on monday"]
    docs = [Doc(id=f"d{i}", text=t) for i, t in enumerate(texts)]
    batched = encode_documents(model, kit.tokenizer, docs)
    singly = np.concatenate([encode_documents(model, kit.tokenizer, [d]) for d in docs])
    assert np.allclose(batched, singly, atol=1e-5)


def test_empty_document_embeds_to_zero(kit):
    model = kit.make_model(seed=0)
    out = encode_documents(model, kit.tokenizer, [Doc(id="e", text="")])
    assert np.array_equal(out, np.zeros_like(out))


def test_encoding_is_deterministic(kit):
    model = kit.make_model(seed=0)
    a = encode_documents(model, kit.tokenizer, kit.docs)
    b = encode_documents(model, kit.tokenizer, kit.docs)
    assert np.array_equal(a, b)


def test_empty_doc_list(kit):
    model = kit.make_model(seed=0)
    out = encode_documents(model, kit.tokenizer, [])
    assert out.shape == (0, 32)
