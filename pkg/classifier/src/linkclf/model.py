"""A small sequence classifier with strictly local windowed attention.

Attention is banded: position i attends to positions j with |i - j| at most
half the window, so cost grows linearly with sequence length for a fixed
window (here the full score matrix is materialised anyway — sequences are
short at desk scale, and the band mask is what matters for the model class).
Position 0 is the classification slot: it reads, and is readable from,
everywhere, and its final hidden state feeds the two-way head.
"""
import math
from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    max_len: int
    d_model: int = 64
    n_layers: int = 4
    n_heads: int = 4
    window: int = 64            # full span: each side sees window // 2
    head_dim: Optional[int] = None     # default d_model // n_heads
    d_ff: Optional[int] = None         # default 4 * d_model
    n_classes: int = 2

    def resolved_head_dim(self) -> int:
        if self.head_dim is not None:
            return self.head_dim
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model {self.d_model} not divisible by "
                             f"{self.n_heads} heads; set head_dim explicitly")
        return self.d_model // self.n_heads

    def resolved_d_ff(self) -> int:
        return self.d_ff if self.d_ff is not None else 4 * self.d_model

    @classmethod
    def full_scale(cls, vocab_size: int = 10_000,
                   max_len: int = 4097) -> "ModelConfig":
        """The configuration for full-network studies: wider, deeper, and a
        window long enough that one head can watch an entire large batch."""
        return cls(vocab_size=vocab_size, max_len=max_len, d_model=128,
                   n_layers=8, n_heads=12, head_dim=16, window=128)


def local_attention_mask(length: int, window: int,
                         device=None) -> torch.Tensor:
    """Boolean [length, length] mask: True where attention is allowed.

    Banded with half-width window // 2, except row/column 0 (the
    classification slot) which is fully connected in both directions.
    """
    if window < 2:
        raise ValueError("window must be at least 2")
    idx = torch.arange(length, device=device)
    band = (idx[:, None] - idx[None, :]).abs() <= window // 2
    band[0, :] = True
    band[:, 0] = True
    return band


class LocalSelfAttention(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.n_heads = config.n_heads
        self.head_dim = config.resolved_head_dim()
        inner = self.n_heads * self.head_dim
        self.qkv = nn.Linear(config.d_model, 3 * inner)
        self.out = nn.Linear(inner, config.d_model)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        b, l, _ = x.shape
        qkv = self.qkv(x).view(b, l, 3, self.n_heads, self.head_dim)
        q, k, v = (qkv[:, :, i].transpose(1, 2) for i in range(3))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        scores = scores.masked_fill(~mask[:l, :l], float("-inf"))
        mixed = torch.softmax(scores, dim=-1) @ v
        return self.out(mixed.transpose(1, 2).reshape(b, l, -1))


class Block(nn.Module):
    """Pre-norm transformer block: attention then a two-layer MLP."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(config.d_model)
        self.attn = LocalSelfAttention(config)
        self.ln2 = nn.LayerNorm(config.d_model)
        self.mlp = nn.Sequential(
            nn.Linear(config.d_model, config.resolved_d_ff()),
            nn.GELU(),
            nn.Linear(config.resolved_d_ff(), config.d_model),
        )

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln1(x), mask)
        return x + self.mlp(self.ln2(x))


class LinkClassifier(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        config.resolved_head_dim()      # validate early
        self.tok_emb = nn.Embedding(config.vocab_size, config.d_model)
        self.pos_emb = nn.Embedding(config.max_len, config.d_model)
        self.blocks = nn.ModuleList(Block(config)
                                    for _ in range(config.n_layers))
        self.ln_final = nn.LayerNorm(config.d_model)
        self.head = nn.Linear(config.d_model, config.n_classes)
        self.register_buffer(
            "mask", local_attention_mask(config.max_len, config.window),
            persistent=False)

    def embed(self, tokens: torch.Tensor) -> torch.Tensor:
        if tokens.shape[1] > self.config.max_len:
            raise ValueError(f"sequence of {tokens.shape[1]} exceeds "
                             f"max_len {self.config.max_len}")
        positions = torch.arange(tokens.shape[1], device=tokens.device)
        return self.tok_emb(tokens) + self.pos_emb(positions)[None]

    def hidden(self, x: torch.Tensor) -> torch.Tensor:
        """Final hidden states from already-embedded input (for probes)."""
        for block in self.blocks:
            x = block(x, self.mask)
        return self.ln_final(x)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """Logits [batch, n_classes] from the classification slot."""
        return self.head(self.hidden(self.embed(tokens))[:, 0])

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())
