import numpy as np
import pytest
import torch

from storyembed import Triplet, batch_hard_triplets, cosine_matrix


def _scan(embeddings: np.ndarray, labels) -> list[tuple[int, int, int]]:
    """Independent exhaustive per-anchor scan (float64, strict comparisons:
    ties go to the first index, same contract as the miner)."""
    normed = embeddings / np.linalg.norm(embeddings, axis=1, keepdims=True)
    sims = normed @ normed.T
    out = []
    for a in range(len(labels)):
        pos = pos_sim = neg = neg_sim = None
        for j in range(len(labels)):
            if j != a and labels[j] == labels[a]:
                if pos is None or sims[a, j] < pos_sim:
                    pos, pos_sim = j, sims[a, j]
            elif labels[j] != labels[a]:
                if neg is None or sims[a, j] > neg_sim:
                    neg, neg_sim = j, sims[a, j]
        if pos is not None and neg is not None:
            out.append((a, pos, neg))
    return out


def test_cosine_matrix_is_symmetric_with_unit_diagonal():
    emb = torch.tensor(np.random.default_rng(0).normal(size=(5, 7)))
    sims = cosine_matrix(emb)
    assert torch.allclose(sims, sims.T, atol=1e-12)
    assert torch.allclose(torch.diagonal(sims), torch.ones(5, dtype=sims.dtype), atol=1e-6)


def test_one_doc_per_label_yields_no_triplets():
    emb = torch.eye(3)
    assert batch_hard_triplets(emb, ["a", "b", "c"]) == []


def test_two_plus_one_forces_the_unique_triplet():
    emb = torch.tensor([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
    out = batch_hard_triplets(emb, ["x", "x", "y"])
    assert out == [Triplet(0, 1, 2), Triplet(1, 0, 2)]


def test_constructed_six_doc_batch():
    # two labels, three docs each.  For anchor 0: doc 2 is the stray "a"
    # (cos 0 vs 0.999 for doc 1) and doc 3 the closest "b" (cos 0.994).
    # For anchor 3: doc 5 is its exact antipode (cos -1, hardest positive)
    # and doc 1 the closest "a" (cos 0.998, hardest negative).
    emb = torch.tensor([
        [1.00, 0.00],   # a
        [0.95, 0.05],   # a
        [0.00, 1.00],   # a
        [0.90, 0.10],   # b
        [-1.00, 0.00],  # b
        [-0.90, -0.10], # b
    ])
    labels = ["a", "a", "a", "b", "b", "b"]
    got = [(t.anchor, t.positive, t.negative) for t in batch_hard_triplets(emb, labels)]
    assert got == _scan(emb.numpy(), labels)
    assert got[0] == (0, 2, 3)
    assert got[3] == (3, 5, 1)


def test_matches_exhaustive_scan_on_random_batches():
    rng = np.random.default_rng(42)
    for size in range(2, 33):
        for _ in range(3):
            n_labels = int(rng.integers(1, min(size, 5) + 1))
            labels = [f"c{int(rng.integers(n_labels))}" for _ in range(size)]
            emb = rng.normal(size=(size, 8))
            got = [(t.anchor, t.positive, t.negative)
                   for t in batch_hard_triplets(torch.tensor(emb), labels)]
            assert got == _scan(emb, labels), (size, labels)


def test_label_count_mismatch_raises():
    with pytest.raises(ValueError):
        batch_hard_triplets(torch.eye(3), ["a", "b"])
    with pytest.raises(ValueError):
        batch_hard_triplets(torch.ones(3), ["a", "b", "c"])
