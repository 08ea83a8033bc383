"""Neural modules for the desk-scale classifiers.

Both architectures route every source of randomness (weight init, dropout)
through an explicit ``torch.Generator`` instead of torch's global RNG. That
keeps training runs bit-reproducible for a given seed even when several runs
execute concurrently in one process.

Shared forward interface (also implemented by the pretrained-encoder wrapper
in ``classifier``):

    embed_ids(ids)                        token embeddings only, no positions
    forward_embedded(embeds, mask, rng)   logits from token embeddings
    forward_ids(ids, mask, rng)           logits from token ids
    head                                  the final scoring Linear

``rng=None`` disables dropout (inference mode). Padding uses id 0, whose
embedding row is zero and receives no gradient.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .errors import ContractError
from .tokenization import PAD_ID


def dropout_with_rng(
    x: torch.Tensor, p: float, rng: torch.Generator | None
) -> torch.Tensor:
    if rng is None or p <= 0.0:
        return x
    keep = torch.rand(x.shape, generator=rng, dtype=x.dtype, device=x.device) >= p
    return x * keep / (1.0 - p)


def _init_linear(layer: nn.Linear, rng: torch.Generator, std: float = 0.02) -> None:
    with torch.no_grad():
        layer.weight.normal_(0.0, std, generator=rng)
        if layer.bias is not None:
            layer.bias.zero_()


def _init_embedding(layer: nn.Embedding, rng: torch.Generator, std: float = 0.02) -> None:
    with torch.no_grad():
        layer.weight.normal_(0.0, std, generator=rng)
        if layer.padding_idx is not None:
            layer.weight[layer.padding_idx].zero_()


class SelfAttention(nn.Module):
    def __init__(self, hidden_size: int, num_heads: int, dropout: float):
        super().__init__()
        if hidden_size % num_heads != 0:
            raise ContractError(
                f"hidden_size {hidden_size} not divisible by num_heads {num_heads}"
            )
        self.num_heads = num_heads
        self.head_dim = hidden_size // num_heads
        self.dropout = dropout
        self.qkv = nn.Linear(hidden_size, 3 * hidden_size)
        self.out = nn.Linear(hidden_size, hidden_size)

    def forward(
        self, x: torch.Tensor, mask: torch.Tensor, rng: torch.Generator | None
    ) -> torch.Tensor:
        batch, length, hidden = x.shape
        qkv = self.qkv(x).view(batch, length, 3, self.num_heads, self.head_dim)
        qkv = qkv.permute(2, 0, 3, 1, 4)  # (3, B, heads, T, head_dim)
        q, k, v = qkv[0], qkv[1], qkv[2]
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        scores = scores.masked_fill(~mask[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        attn = dropout_with_rng(attn, self.dropout, rng)
        context = (attn @ v).transpose(1, 2).reshape(batch, length, hidden)
        return self.out(context)


class TransformerBlock(nn.Module):
    """Pre-norm block: attention and feed-forward sublayers with residuals."""

    def __init__(self, hidden_size: int, num_heads: int, dropout: float):
        super().__init__()
        self.norm_attn = nn.LayerNorm(hidden_size)
        self.attn = SelfAttention(hidden_size, num_heads, dropout)
        self.norm_ffn = nn.LayerNorm(hidden_size)
        self.ffn_in = nn.Linear(hidden_size, 4 * hidden_size)
        self.ffn_out = nn.Linear(4 * hidden_size, hidden_size)
        self.dropout = dropout

    def forward(
        self, x: torch.Tensor, mask: torch.Tensor, rng: torch.Generator | None
    ) -> torch.Tensor:
        h = self.attn(self.norm_attn(x), mask, rng)
        x = x + dropout_with_rng(h, self.dropout, rng)
        h = self.ffn_out(dropout_with_rng(torch.nn.functional.gelu(self.ffn_in(self.norm_ffn(x))), self.dropout, rng))
        return x + dropout_with_rng(h, self.dropout, rng)


class DeskTransformerClassifier(nn.Module):
    """Randomly initialized transformer encoder with a one-unit scoring head.

    The first position (a dedicated aggregation token prepended by the
    tokenizer) feeds dropout plus a single linear unit; the sigmoid of that
    logit is the offensive-class probability.
    """

    def __init__(
        self,
        vocab_size: int,
        num_blocks: int,
        num_heads: int,
        hidden_size: int,
        max_sequence_length: int,
        dropout: float,
        seed: int | None = None,
    ):
        super().__init__()
        self.dropout = dropout
        self.token_embedding = nn.Embedding(vocab_size, hidden_size, padding_idx=PAD_ID)
        self.position_embedding = nn.Embedding(max_sequence_length, hidden_size)
        self.blocks = nn.ModuleList(
            TransformerBlock(hidden_size, num_heads, dropout) for _ in range(num_blocks)
        )
        self.final_norm = nn.LayerNorm(hidden_size)
        self.head = nn.Linear(hidden_size, 1)
        self.reset_parameters(seed)

    def reset_parameters(self, seed: int | None) -> None:
        rng = torch.Generator()
        rng.manual_seed(0 if seed is None else seed)
        _init_embedding(self.token_embedding, rng)
        _init_embedding(self.position_embedding, rng)
        for module in self.modules():
            if isinstance(module, nn.Linear):
                _init_linear(module, rng)
            elif isinstance(module, nn.LayerNorm):
                with torch.no_grad():
                    module.weight.fill_(1.0)
                    module.bias.zero_()

    def embed_ids(self, ids: torch.Tensor) -> torch.Tensor:
        return self.token_embedding(ids)

    def forward_embedded(
        self,
        embeds: torch.Tensor,
        mask: torch.Tensor,
        rng: torch.Generator | None = None,
    ) -> torch.Tensor:
        length = embeds.shape[1]
        positions = torch.arange(length, device=embeds.device)
        x = embeds + self.position_embedding(positions)[None, :, :]
        x = dropout_with_rng(x, self.dropout, rng)
        for block in self.blocks:
            x = block(x, mask, rng)
        pooled = self.final_norm(x)[:, 0]
        pooled = dropout_with_rng(pooled, self.dropout, rng)
        return self.head(pooled).squeeze(-1)

    def forward_ids(
        self,
        ids: torch.Tensor,
        mask: torch.Tensor,
        rng: torch.Generator | None = None,
    ) -> torch.Tensor:
        return self.forward_embedded(self.embed_ids(ids), mask, rng)


class BiLstmClassifier(nn.Module):
    """Bidirectional recurrent baseline over learned word embeddings.

    Final states of the two directions are concatenated into a single linear
    scoring unit.
    """

    def __init__(
        self,
        vocab_size: int,
        embedding_dim: int,
        hidden_dim: int,
        seed: int | None = None,
    ):
        super().__init__()
        self.token_embedding = nn.Embedding(vocab_size, embedding_dim, padding_idx=PAD_ID)
        self.lstm = nn.LSTM(
            embedding_dim, hidden_dim, batch_first=True, bidirectional=True
        )
        self.head = nn.Linear(2 * hidden_dim, 1)
        self.reset_parameters(seed)

    def reset_parameters(self, seed: int | None) -> None:
        rng = torch.Generator()
        rng.manual_seed(0 if seed is None else seed)
        _init_embedding(self.token_embedding, rng)
        bound = 1.0 / math.sqrt(self.lstm.hidden_size)
        with torch.no_grad():
            for name, param in self.lstm.named_parameters():
                param.uniform_(-bound, bound, generator=rng)
        _init_linear(self.head, rng)

    def embed_ids(self, ids: torch.Tensor) -> torch.Tensor:
        return self.token_embedding(ids)

    def forward_embedded(
        self,
        embeds: torch.Tensor,
        mask: torch.Tensor,
        rng: torch.Generator | None = None,
    ) -> torch.Tensor:
        lengths = mask.sum(dim=1).cpu()
        packed = nn.utils.rnn.pack_padded_sequence(
            embeds, lengths, batch_first=True, enforce_sorted=False
        )
        _, (h_n, _) = self.lstm(packed)
        pooled = torch.cat([h_n[0], h_n[1]], dim=-1)  # forward, backward final states
        return self.head(pooled).squeeze(-1)

    def forward_ids(
        self,
        ids: torch.Tensor,
        mask: torch.Tensor,
        rng: torch.Generator | None = None,
    ) -> torch.Tensor:
        return self.forward_embedded(self.embed_ids(ids), mask, rng)


def head_parameter_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.head.parameters())
