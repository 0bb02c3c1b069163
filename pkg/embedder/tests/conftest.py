import types

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

import storyembed as se

EXTRA_WORDS = [
    "storm", "hits", "genoa", "port", "today", "news", "fire",
    "crews", "reached", "on", "monday", "one", "third",
]


@pytest.fixture(scope="session")
def kit(tmp_path_factory):
    """Tiny offline encoder kit: wordpiece tokenizer over a fixed vocab and
    a 2-layer randomly initialized backbone (no downloads)."""
    words = sorted({f"ev{e}w{k}" for e in range(3) for k in range(4)} | set(EXTRA_WORDS))
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + words + ["##s"]
    vocab_path = tmp_path_factory.mktemp("kit") / "vocab.txt"
    vocab_path.write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(str(vocab_path), model_max_length=24)
    config = BertConfig(
        vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2,
        num_attention_heads=4, intermediate_size=64, max_position_embeddings=24,
    )

    def make_model(seed: int = 0, entity_aware: bool = True) -> se.EntityAwareEncoder:
        torch.manual_seed(seed)
        return se.EntityAwareEncoder(BertModel(config), entity_aware=entity_aware)

    # 3 events x 4 docs with event-specific vocabulary
    docs = [
        se.Doc(
            id=f"e{e}d{j}",
            text=" ".join(f"ev{e}w{(j + k) % 4}" for k in range(3)) + " today",
            cluster=f"ev{e}",
        )
        for e in range(3)
        for j in range(4)
    ]
    return types.SimpleNamespace(
        tokenizer=tokenizer, config=config, make_model=make_model, docs=docs
    )
