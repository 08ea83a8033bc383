"""Word-level tokenizers used by the randomly initialized desk models.

The desk transformer uses a hashing tokenizer: tokens are mapped straight into
a fixed-size id space with crc32, so no vocabulary has to be fitted or stored
and encoding is identical across processes. The recurrent baseline uses an
explicit vocabulary built from its training split.

Pretrained encoders bring their own subword tokenizer (see
``classifier.PretrainedEncoderClassifier``); the shared currency is the
``Encoding`` record, which keeps the piece-to-word alignment needed for
attribution rendering.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import LabeledExample
from .errors import ContractError

PAD_ID = 0
CLS_ID = 1
UNK_ID = 2
NUM_RESERVED_IDS = 3


@dataclass(frozen=True)
class Encoding:
    """Token ids plus alignment back to surface words.

    word_ids[i] is the index into `words` of the word that produced piece i,
    or None for special positions (e.g. the leading aggregation token).
    """

    ids: tuple[int, ...]
    pieces: tuple[str, ...]
    word_ids: tuple[int | None, ...]
    words: tuple[str, ...]

    def __post_init__(self):
        if not (len(self.ids) == len(self.pieces) == len(self.word_ids)):
            raise ContractError("encoding fields must have equal length")


def hash_token_id(token: str, vocab_size: int) -> int:
    """Deterministic token id in [NUM_RESERVED_IDS, vocab_size)."""
    space = vocab_size - NUM_RESERVED_IDS
    return NUM_RESERVED_IDS + zlib.crc32(token.encode("utf-8")) % space


class HashingWordTokenizer:
    """Whitespace words hashed into a fixed id space, with a leading CLS slot."""

    def __init__(self, vocab_size: int, prepend_cls: bool = True):
        if vocab_size <= NUM_RESERVED_IDS:
            raise ContractError(
                f"vocab_size must exceed {NUM_RESERVED_IDS}, got {vocab_size}"
            )
        self.vocab_size = vocab_size
        self.prepend_cls = prepend_cls
        self.pad_id = PAD_ID

    def encode(self, text: str, max_length: int) -> Encoding:
        words = text.split()
        if not words:
            raise ContractError("cannot encode empty text")
        budget = max_length - (1 if self.prepend_cls else 0)
        words = words[:budget]
        ids: list[int] = []
        pieces: list[str] = []
        word_ids: list[int | None] = []
        if self.prepend_cls:
            ids.append(CLS_ID)
            pieces.append("[CLS]")
            word_ids.append(None)
        for i, word in enumerate(words):
            ids.append(hash_token_id(word, self.vocab_size))
            pieces.append(word)
            word_ids.append(i)
        return Encoding(
            ids=tuple(ids),
            pieces=tuple(pieces),
            word_ids=tuple(word_ids),
            words=tuple(words),
        )


class VocabWordTokenizer:
    """Whitespace words looked up in a fixed vocabulary; unknowns map to UNK."""

    def __init__(self, tokens: Sequence[str]):
        if not tokens:
            raise ContractError("vocabulary must not be empty")
        self.tokens = tuple(tokens)
        self._index = {tok: NUM_RESERVED_IDS + i for i, tok in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ContractError("vocabulary contains duplicate tokens")
        self.vocab_size = NUM_RESERVED_IDS + len(self.tokens)
        self.pad_id = PAD_ID

    def encode(self, text: str, max_length: int) -> Encoding:
        words = text.split()
        if not words:
            raise ContractError("cannot encode empty text")
        words = words[:max_length]
        ids = tuple(self._index.get(w, UNK_ID) for w in words)
        return Encoding(
            ids=ids,
            pieces=tuple(words),
            word_ids=tuple(range(len(words))),
            words=tuple(words),
        )


def build_vocabulary(
    examples: Iterable[LabeledExample], max_size: int | None = None
) -> tuple[str, ...]:
    """Vocabulary from a training split: tokens by descending frequency,
    ties broken alphabetically."""
    counts: dict[str, int] = {}
    for ex in examples:
        for word in ex.text.split():
            counts[word] = counts.get(word, 0) + 1
    if not counts:
        raise ContractError("cannot build a vocabulary from empty examples")
    ordered = sorted(counts, key=lambda w: (-counts[w], w))
    if max_size is not None:
        ordered = ordered[:max_size]
    return tuple(ordered)
