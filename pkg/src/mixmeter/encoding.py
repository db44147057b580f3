"""Turning traces into fixed-length token sequences.

The adversary's view of the network is a sequence of integer tokens: each
transmission event contributes the id of the link it crossed, 0 stands for "no
activity", and the last vocabulary slot is a classification marker that
replaces the first token of a model-ready sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .traffic import Trace

CANONICAL_LENGTHS = (256, 512, 1024, 2048, 4096)


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple
    vocab_size: int

    def __post_init__(self):
        if len(self.tokens) not in CANONICAL_LENGTHS:
            raise ValueError(f"sequence length must be one of {CANONICAL_LENGTHS}")
        if any(t < 0 or t >= self.vocab_size for t in self.tokens):
            raise ValueError("token outside vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def cls_token_id(self) -> int:
        return self.vocab_size - 1


def encode(trace: Trace, window: Tuple[int, int], vocab_size: int) -> TokenSequence:
    """Tokens for `window = (start_index, length)` of the trace's event list."""
    start, length = window
    if start < 0 or start + length > len(trace.events):
        raise ValueError("window exceeds trace extent")
    return TokenSequence(tokens=tuple(trace.link_sequence(start, length)),
                         vocab_size=vocab_size)


def decode(seq: TokenSequence) -> List[int]:
    """The link ids a sequence claims were active, in order.

    Zeros (inactivity padding) and the classification marker carry no link, so
    they are dropped.
    """
    return [t for t in seq.tokens if 0 < t < seq.cls_token_id]


def mask_to_length(seq: TokenSequence, target: int,
                   rng: Optional[np.random.Generator] = None) -> TokenSequence:
    """Keep one uniformly placed contiguous region of `target` tokens, zero the rest.

    The output has the same length as the input; only the surviving region is
    informative.  target == len(seq) is the identity.
    """
    if target not in CANONICAL_LENGTHS:
        raise ValueError(f"target length must be one of {CANONICAL_LENGTHS}")
    if target > len(seq):
        raise ValueError("target exceeds sequence length")
    if target == len(seq):
        return seq
    if rng is None:
        raise ValueError("masking below full length needs an RNG")
    start = int(rng.integers(0, len(seq) - target + 1))
    tokens = [0] * len(seq)
    tokens[start:start + target] = seq.tokens[start:start + target]
    return TokenSequence(tokens=tuple(tokens), vocab_size=seq.vocab_size)


def retained_span(seq_length: int, target: int, rng: np.random.Generator) -> Tuple[int, int]:
    """Draw the (start, length) region mask_to_length would keep.

    Exposed so ledger-based consumers can mask their evidence with the same
    distribution over regions as the token-level operation.
    """
    if target >= seq_length:
        return 0, seq_length
    return int(rng.integers(0, seq_length - target + 1)), target


def prepend_cls(seq: TokenSequence) -> TokenSequence:
    """Overwrite position 0 with the classification marker (idempotent in effect)."""
    tokens = (seq.cls_token_id,) + seq.tokens[1:]
    return TokenSequence(tokens=tokens, vocab_size=seq.vocab_size)
