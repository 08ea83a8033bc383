"""Shared test scaffolding: desk-scale configs and a linear probe model."""

from __future__ import annotations

import torch
from torch import nn

from offlang import ModelConfig, TrainingConfig
from offlang.tokenization import VocabWordTokenizer

# vocab 8192: the synthetic fixture vocabularies hash collision-free there
DESK_MODEL = ModelConfig(
    encoder_id=None,
    num_blocks=2,
    num_attention_heads=2,
    hidden_size=32,
    head_dropout=0.1,
    max_sequence_length=16,
    vocab_size=8192,
)

# enough optimization to separate lexicon-defined classes cleanly
DESK_TRAINING = TrainingConfig(
    epochs=40, batch_size=8, peak_learning_rate=3e-3, seed=3
)

# fast settings for structural checks where model quality is irrelevant
FAST_TRAINING = TrainingConfig(
    epochs=4, batch_size=8, peak_learning_rate=2e-3, seed=9
)


class LinearProbe(nn.Module):
    """F(e) = sum over positions of (w . e_t + b): linear in the embeddings,
    so integrated gradients must be exact for any step count. The padding
    embedding row is zero, making the pad-sequence baseline the zero input."""

    def __init__(self, vocab_size: int, dim: int, seed: int = 1, zero_weights: bool = False):
        super().__init__()
        rng = torch.Generator()
        rng.manual_seed(seed)
        self.token_embedding = nn.Embedding(vocab_size, dim, padding_idx=0)
        self.head = nn.Linear(dim, 1)
        with torch.no_grad():
            self.token_embedding.weight.normal_(0.0, 1.0, generator=rng)
            self.token_embedding.weight[0].zero_()
            if zero_weights:
                self.head.weight.zero_()
            else:
                self.head.weight.normal_(0.0, 1.0, generator=rng)
            self.head.bias.fill_(0.25)

    def embed_ids(self, ids):
        return self.token_embedding(ids)

    def forward_embedded(self, embeds, mask, rng=None):
        return (self.head(embeds).squeeze(-1) * mask.to(embeds.dtype)).sum(dim=-1)

    def forward_ids(self, ids, mask, rng=None):
        return self.forward_embedded(self.embed_ids(ids), mask, rng)


class ProbeHandle:
    """Duck-typed attribution target wrapping a module + tokenizer."""

    def __init__(self, module, tokenizer, max_sequence_length: int = 16):
        self.module = module
        self.tokenizer = tokenizer
        self.max_sequence_length = max_sequence_length


def make_probe(words: list[str], dim: int = 8, seed: int = 1, zero_weights: bool = False) -> ProbeHandle:
    tokenizer = VocabWordTokenizer(words)
    module = LinearProbe(tokenizer.vocab_size, dim, seed=seed, zero_weights=zero_weights)
    return ProbeHandle(module, tokenizer)
