"""TF-IDF fitting/encoding, embedding store, cluster aggregation."""

import math
from datetime import datetime

import numpy as np
import pytest

from storystream.core import SPARSE_KEYS, SectionKind, SparseVector, Unit
from storystream.errors import (
    DimensionMismatch,
    DuplicateDocument,
    EmptyCorpus,
    MissingEmbedding,
)
from storystream.represent import (
    EmbeddingStore,
    cluster_from_doc,
    encode_document,
    encode_sparse,
    fit_all_units,
    fit_tfidf,
    fold_document,
)

from helpers import make_doc, planted_corpus

T0 = datetime(2024, 1, 1)


def _toy_corpus():
    return [
        make_doc("d1", ["fire"], ["fire", "rare"], T0),
        make_doc("d2", ["fire"], ["flood"], T0),
        make_doc("d3", ["fire"], ["flood"], T0),
    ]


def test_idf_values():
    model = fit_tfidf(_toy_corpus(), Unit.TOKEN)
    idf = {t: model.idf[i] for t, i in model.vocabulary.items()}
    # "rare" in 1 of 3 title+body bags, "fire" in all 3, "flood" in 2
    assert idf["rare"] == pytest.approx(math.log(3.0) + 1.0, abs=1e-12)
    assert idf["fire"] == pytest.approx(1.0, abs=1e-12)
    assert idf["flood"] == pytest.approx(math.log(1.5) + 1.0, abs=1e-12)
    assert model.doc_count == 3
    assert sorted(model.vocabulary) == ["fire", "flood", "rare"]


def test_fit_empty_corpus_rejected():
    with pytest.raises(EmptyCorpus):
        fit_tfidf([], Unit.TOKEN)


def test_entity_unit_may_have_empty_vocabulary():
    # toy corpus has no entity annotations at all
    model = fit_tfidf(_toy_corpus(), Unit.ENTITY)
    assert len(model.vocabulary) == 0
    vec = encode_sparse(_toy_corpus()[0], model, SectionKind.TITLEBODY)
    assert len(vec) == 0


def test_encode_sparse_tf_times_idf():
    corpus = _toy_corpus()
    model = fit_tfidf(corpus, Unit.TOKEN)
    vec = encode_sparse(corpus[0], model, SectionKind.TITLEBODY)
    d = {t: vec.as_dict().get(i, 0.0) for t, i in model.vocabulary.items()}
    assert d["fire"] == pytest.approx(2.0 * 1.0)  # appears in title and body
    assert d["rare"] == pytest.approx(math.log(3.0) + 1.0)
    assert d["flood"] == 0.0


def test_encode_drops_out_of_vocabulary_terms():
    model = fit_tfidf(_toy_corpus(), Unit.TOKEN)
    stranger = make_doc("d9", ["meteor"], ["meteor", "fire"], T0)
    vec = encode_sparse(stranger, model, SectionKind.TITLEBODY)
    assert set(vec.indices) == {model.vocabulary["fire"]}
    # support always within the vocabulary index range
    assert all(0 <= i < len(model.vocabulary) for i in vec.indices)


def test_embedding_store():
    store = EmbeddingStore(dim=3)
    store.add("a", [1.0, 2.0, 3.0])
    assert np.array_equal(store.get("a"), [1.0, 2.0, 3.0])
    with pytest.raises(MissingEmbedding):
        store.get("nope")
    with pytest.raises(DimensionMismatch):
        store.add("b", [1.0, 2.0])
    zero = EmbeddingStore.zeros(dim=4)
    assert np.array_equal(zero.get("anything"), np.zeros(4))
    assert "a" in store and len(store) == 1


def test_encode_document_shape():
    corpus = _toy_corpus()
    models = fit_all_units(corpus)
    store = EmbeddingStore.zeros(dim=2)
    rep = encode_document(corpus[0], models, store)
    assert set(rep.sparse.keys()) == set(SPARSE_KEYS)
    assert rep.dense.shape == (2,)
    assert rep.timestamp == corpus[0].timestamp
    assert set(models) == set(Unit)


def _rep(dense, ts, sparse_value=0.0):
    sparse = {k: SparseVector.from_mapping({0: sparse_value}) for k in SPARSE_KEYS}
    from storystream.core import DocRepSet
    return DocRepSet(sparse=sparse, dense=np.asarray(dense, dtype=float), timestamp=ts)


def test_singleton_cluster_mirrors_document():
    rep = _rep([1.0, 2.0], T0, sparse_value=3.0)
    c = cluster_from_doc(rep, cluster_id=5, doc_id="a")
    assert c.id == 5 and c.size == 1 and c.member_ids == ("a",)
    assert np.array_equal(c.dense_mean, rep.dense)
    assert c.ts_min == c.ts_max == T0
    assert c.ts_mean == T0


def test_fold_means():
    c = cluster_from_doc(_rep([0.0, 2.0], datetime(2024, 1, 1)), 0, "a")
    c = fold_document(c, _rep([2.0, 0.0], datetime(2024, 1, 3)), "b")
    assert c.size == 2
    assert np.allclose(c.dense_mean, [1.0, 1.0])
    assert c.ts_min == datetime(2024, 1, 1)
    assert c.ts_max == datetime(2024, 1, 3)
    assert c.ts_mean == datetime(2024, 1, 2)
    assert c.member_ids == ("a", "b")


def test_fold_sparse_union_support():
    a = _rep([0.0], T0)
    a.sparse[SPARSE_KEYS[0]] = SparseVector.from_mapping({1: 2.0, 4: 2.0})
    b = _rep([0.0], T0)
    b.sparse[SPARSE_KEYS[0]] = SparseVector.from_mapping({4: 4.0, 7: 6.0})
    c = fold_document(cluster_from_doc(a, 0, "a"), b, "b")
    assert c.sparse_mean[SPARSE_KEYS[0]].as_dict() == {1: 1.0, 4: 3.0, 7: 3.0}


def test_fold_rejects_duplicates_and_dim_mismatch():
    c = cluster_from_doc(_rep([1.0], T0), 0, "a")
    with pytest.raises(DuplicateDocument):
        fold_document(c, _rep([1.0], T0), "a")
    with pytest.raises(DimensionMismatch):
        fold_document(c, _rep([1.0, 2.0], T0), "b")


def test_fold_order_invariance():
    rng = np.random.default_rng(11)
    docs, store = planted_corpus(1, 8, rng, dim=6)
    models = fit_all_units(docs)
    reps = {d.id: encode_document(d, models, store) for d in docs}

    def fold_all(order):
        c = cluster_from_doc(reps[order[0]], 0, order[0])
        for doc_id in order[1:]:
            c = fold_document(c, reps[doc_id], doc_id)
        return c

    ids = [d.id for d in docs]
    base = fold_all(ids)
    for _ in range(5):
        perm = list(rng.permutation(ids))
        other = fold_all(perm)
        assert np.allclose(other.dense_mean, base.dense_mean, atol=1e-9)
        assert abs(other.ts_mean_epoch - base.ts_mean_epoch) < 1e-6
        assert other.ts_min == base.ts_min and other.ts_max == base.ts_max
        for key in SPARSE_KEYS:
            lhs, rhs = other.sparse_mean[key].as_dict(), base.sparse_mean[key].as_dict()
            assert set(lhs) == set(rhs)
            assert all(abs(lhs[i] - rhs[i]) < 1e-9 for i in lhs)
