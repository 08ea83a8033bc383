from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offlang.corpus import Label, LabeledExample
from offlang.errors import ContractError
from offlang.tokenization import (
    CLS_ID,
    NUM_RESERVED_IDS,
    PAD_ID,
    UNK_ID,
    HashingWordTokenizer,
    VocabWordTokenizer,
    build_vocabulary,
    hash_token_id,
)

words = st.text(
    alphabet=st.characters(blacklist_categories=("Zs", "Cc", "Cf")), min_size=1, max_size=12
)


@given(words, st.sampled_from([64, 4096, 8192]))
@settings(max_examples=200)
def test_hash_ids_stay_in_range(token, vocab_size):
    token_id = hash_token_id(token, vocab_size)
    assert NUM_RESERVED_IDS <= token_id < vocab_size


def test_hash_is_stable():
    assert hash_token_id("hello", 8192) == hash_token_id("hello", 8192)


def test_hashing_tokenizer_prepends_cls_and_aligns_words():
    tokenizer = HashingWordTokenizer(8192)
    encoding = tokenizer.encode("one two three", max_length=16)
    assert encoding.ids[0] == CLS_ID
    assert encoding.pieces[0] == "[CLS]"
    assert encoding.word_ids[0] is None
    assert encoding.words == ("one", "two", "three")
    assert encoding.word_ids[1:] == (0, 1, 2)
    assert tokenizer.pad_id == PAD_ID


def test_hashing_tokenizer_truncates_to_budget():
    tokenizer = HashingWordTokenizer(8192)
    encoding = tokenizer.encode("a b c d e f", max_length=4)
    assert len(encoding.ids) == 4  # CLS + 3 words
    assert encoding.words == ("a", "b", "c")


def test_hashing_tokenizer_rejects_empty_text():
    tokenizer = HashingWordTokenizer(8192)
    with pytest.raises(ContractError):
        tokenizer.encode("   ", max_length=8)


def test_vocab_tokenizer_maps_unknown_to_unk():
    tokenizer = VocabWordTokenizer(["known"])
    encoding = tokenizer.encode("known mystery", max_length=8)
    assert encoding.ids == (NUM_RESERVED_IDS, UNK_ID)


def test_vocab_tokenizer_rejects_duplicates():
    with pytest.raises(ContractError):
        VocabWordTokenizer(["a", "a"])


def test_build_vocabulary_orders_by_frequency_then_token():
    examples = [
        LabeledExample(id=str(i), text=text, label=Label.NOT_OFFENSIVE, language="EN")
        for i, text in enumerate(["b b c", "a c", "c"])
    ]
    assert build_vocabulary(examples) == ("c", "b", "a")
    assert build_vocabulary(examples, max_size=2) == ("c", "b")
