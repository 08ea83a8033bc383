from __future__ import annotations

from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offlang import (
    ContractError,
    CorpusCatalog,
    IngestionError,
    Label,
    LabeledExample,
    LanguageCorpus,
    concatenate_corpora,
    corpus_summary,
    generate_synthetic_corpus,
    load_corpus,
    normalize_text,
    slice_fraction,
    synthetic_vocabulary,
)
from offlang.corpus import summary_markdown
from offlang.tokenization import hash_token_id

from oracles import expected_stratified_counts, oracle_replace_urls


def ex(i, text="some text", label=Label.NOT_OFFENSIVE, language="EN"):
    return LabeledExample(id=str(i), text=text, label=label, language=language)


# ---------------------------------------------------------------------------
# normalize_text
# ---------------------------------------------------------------------------

def test_normalize_collapses_whitespace():
    assert normalize_text("  hello   world ") == "hello world"


def test_normalize_preserves_user_placeholder():
    assert normalize_text("@USER you are ok") == "@USER you are ok"


@pytest.mark.parametrize(
    "raw",
    [
        "see https://x.co/ab now",
        "http://example.com/path?q=1 leading",
        "trailing www.site.org/page",
        "two https://a.b/c and http://d.e",
        "no links here at all",
    ],
)
def test_normalize_url_replacement_matches_oracle(raw):
    assert normalize_text(raw) == oracle_replace_urls(raw)


def test_normalize_url_example():
    assert normalize_text("see https://x.co/ab now") == "see URL now"


def test_normalize_applies_nfc():
    decomposed = "café"  # e + combining acute
    assert normalize_text(decomposed) == "café"


@given(st.text(max_size=80))
@settings(max_examples=100)
def test_normalize_idempotent(raw):
    once = normalize_text(raw)
    assert normalize_text(once) == once


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

def test_empty_text_rejected():
    with pytest.raises(ContractError):
        LabeledExample(id="1", text="", label=Label.OFFENSIVE, language="EN")


def test_unknown_language_rejected():
    with pytest.raises(ContractError):
        LabeledExample(id="1", text="x", label=Label.OFFENSIVE, language="XX")


def test_duplicate_ids_within_split_rejected():
    with pytest.raises(ContractError):
        LanguageCorpus("EN", (ex(1), ex(1)), (), ())


def test_overlapping_split_ids_rejected():
    with pytest.raises(ContractError):
        LanguageCorpus("EN", (ex(1),), (ex(1),), ())


def test_catalog_rejects_duplicate_language():
    corpus = LanguageCorpus("EN", (ex(1),), (ex(2),), (ex(3),))
    with pytest.raises(ContractError):
        CorpusCatalog.of([corpus, corpus])


def test_catalog_iteration_order_is_fixed():
    corpora = [
        LanguageCorpus(lang, (ex(f"{lang}-1", language=lang),), (), ())
        for lang in ("TR", "SYNTHETIC_B", "EN", "AR", "SYNTHETIC_A", "DA", "EL")
    ]
    catalog = CorpusCatalog.of(corpora)
    assert catalog.languages == ("EN", "DA", "EL", "AR", "TR", "SYNTHETIC_A", "SYNTHETIC_B")


def ex_lang(i, lang):
    return LabeledExample(id=str(i), text="w", label=Label.NOT_OFFENSIVE, language=lang)


# ---------------------------------------------------------------------------
# TSV loading
# ---------------------------------------------------------------------------

def _write_tsv(path: Path, rows):
    path.write_text("\n".join("\t".join(row) for row in rows) + "\n", encoding="utf-8")


def _write_corpus_dir(root: Path, train, dev, test, test_labels=None):
    root.mkdir(parents=True, exist_ok=True)
    header = ["id", "tweet", "subtask_a"]
    _write_tsv(root / "train.tsv", [header, *train])
    _write_tsv(root / "dev.tsv", [header, *dev])
    if test_labels is None:
        _write_tsv(root / "test.tsv", [header, *test])
    else:
        _write_tsv(root / "test.tsv", [["id", "tweet"], *test])
        _write_tsv(root / "test_labels.tsv", test_labels)


def test_load_corpus_maps_labels(tmp_path):
    _write_corpus_dir(
        tmp_path,
        train=[["1", "you are awful", "OFF"], ["2", "nice day", "NOT"], ["3", "ugh", "OFF"]],
        dev=[["4", "fine", "NOT"], ["5", "bad words", "OFF"]],
        test=[["6", "whatever", "NOT"], ["7", "angry stuff", "OFF"]],
    )
    corpus = load_corpus(tmp_path, "EN")
    labels = [e.label for e in corpus.train]
    assert labels.count(Label.OFFENSIVE) == 2
    assert labels.count(Label.NOT_OFFENSIVE) == 1
    assert all(e.language == "EN" for e in corpus.train)
    assert len(corpus.train) == 3 and len(corpus.dev) == 2 and len(corpus.test) == 2


def test_load_corpus_separate_test_labels(tmp_path):
    _write_corpus_dir(
        tmp_path,
        train=[["1", "a b", "OFF"], ["2", "c d", "NOT"]],
        dev=[["3", "e", "NOT"], ["4", "f", "OFF"]],
        test=[["5", "g", ""], ["6", "h", ""]][:2],
        test_labels=[["id", "label"], ["5", "OFF"], ["6", "NOT"]],
    )
    corpus = load_corpus(tmp_path, "DA")
    assert [e.label for e in corpus.test] == [Label.OFFENSIVE, Label.NOT_OFFENSIVE]


def test_load_corpus_unknown_label_names_row(tmp_path):
    _write_corpus_dir(
        tmp_path,
        train=[["1", "a", "OFF"], ["2", "b", "MAYBE"]],
        dev=[["3", "c", "NOT"]],
        test=[["4", "d", "NOT"]],
    )
    with pytest.raises(IngestionError, match="'2'"):
        load_corpus(tmp_path, "EN")


def test_load_corpus_missing_file_names_split(tmp_path):
    _write_corpus_dir(
        tmp_path,
        train=[["1", "a", "OFF"]],
        dev=[["2", "b", "NOT"]],
        test=[["3", "c", "NOT"]],
    )
    (tmp_path / "dev.tsv").unlink()
    with pytest.raises(IngestionError, match="dev"):
        load_corpus(tmp_path, "EN")


def test_load_corpus_duplicate_id_rejected(tmp_path):
    _write_corpus_dir(
        tmp_path,
        train=[["1", "a", "OFF"], ["1", "b", "NOT"]],
        dev=[["2", "c", "NOT"]],
        test=[["3", "d", "NOT"]],
    )
    with pytest.raises(IngestionError, match="duplicate id"):
        load_corpus(tmp_path, "EN")


def test_load_corpus_normalizes_text(tmp_path):
    _write_corpus_dir(
        tmp_path,
        train=[["1", "see https://x.co/ab   now", "OFF"]],
        dev=[["2", "b", "NOT"]],
        test=[["3", "c", "NOT"]],
    )
    corpus = load_corpus(tmp_path, "EN")
    assert corpus.train[0].text == "see URL now"


def test_load_corpus_deterministic(tmp_path):
    _write_corpus_dir(
        tmp_path,
        train=[["1", "a b c", "OFF"], ["2", "d e", "NOT"]],
        dev=[["3", "f", "NOT"]],
        test=[["4", "g", "OFF"]],
    )
    assert load_corpus(tmp_path, "EL") == load_corpus(tmp_path, "EL")


# ---------------------------------------------------------------------------
# slice_fraction
# ---------------------------------------------------------------------------

def balanced_split(n):
    half = n // 2
    return tuple(
        ex(i, label=Label.OFFENSIVE if i < half else Label.NOT_OFFENSIVE)
        for i in range(n)
    )


def test_slice_stratified_counts_match_recount_oracle():
    split = balanced_split(100)
    result = slice_fraction(split, 0.05, seed=7)
    assert len(result) == 5
    counts = Counter(e.label for e in result)
    expected = expected_stratified_counts(
        {Label.OFFENSIVE: 50, Label.NOT_OFFENSIVE: 50}, 0.05
    )
    assert counts[Label.OFFENSIVE] == expected[Label.OFFENSIVE]
    assert counts[Label.NOT_OFFENSIVE] == expected[Label.NOT_OFFENSIVE]
    assert {2, 3} == {counts[Label.OFFENSIVE], counts[Label.NOT_OFFENSIVE]}
    assert slice_fraction(split, 0.05, seed=7) == result  # determinism


@pytest.mark.parametrize("fraction", [0.13, 0.37, 0.5, 0.91])
def test_slice_counts_various_fractions(fraction):
    split = tuple(
        ex(i, label=Label.OFFENSIVE if i % 3 == 0 else Label.NOT_OFFENSIVE)
        for i in range(60)
    )
    n_off = sum(1 for e in split if e.label is Label.OFFENSIVE)
    result = slice_fraction(split, fraction, seed=1)
    expected = expected_stratified_counts(
        {Label.OFFENSIVE: n_off, Label.NOT_OFFENSIVE: 60 - n_off}, fraction
    )
    counts = Counter(e.label for e in result)
    assert counts[Label.OFFENSIVE] == expected[Label.OFFENSIVE]
    assert counts[Label.NOT_OFFENSIVE] == expected[Label.NOT_OFFENSIVE]


def test_slice_identity_at_one():
    split = balanced_split(10)
    assert slice_fraction(split, 1.0, seed=3) == split


def test_slice_sizes_nondecreasing():
    split = balanced_split(40)
    sizes = [len(slice_fraction(split, 0.05 * k, seed=2)) for k in range(1, 21)]
    assert sizes == sorted(sizes)
    assert sizes[-1] == 40


def test_slice_output_is_subset_in_original_order():
    split = balanced_split(30)
    result = slice_fraction(split, 0.4, seed=4)
    positions = [split.index(e) for e in result]
    assert positions == sorted(positions)


@pytest.mark.parametrize("fraction", [0.0, -0.2, 1.2])
def test_slice_rejects_bad_fraction(fraction):
    with pytest.raises(ContractError):
        slice_fraction(balanced_split(10), fraction, seed=0)


# ---------------------------------------------------------------------------
# concatenate_corpora
# ---------------------------------------------------------------------------

def test_concatenate_is_seeded_permutation_of_single_input():
    split = balanced_split(12)
    merged = concatenate_corpora([("EN", split)], seed=5)
    assert Counter(merged) == Counter(split)
    assert concatenate_corpora([("EN", split)], seed=5) == merged


def test_concatenate_preserves_multiset():
    a = tuple(ex(f"a{i}", language="EN") for i in range(3))
    b = tuple(ex(f"b{i}", language="DA", label=Label.OFFENSIVE) for i in range(3))
    merged = concatenate_corpora([("EN", a), ("DA", b)], seed=0)
    assert len(merged) == 6
    assert Counter(merged) == Counter(a) + Counter(b)
    assert {e.language for e in merged} == {"EN", "DA"}


def test_concatenate_table_one_train_sizes():
    # five splits with the published per-language training sizes sum to 54462
    sizes = {"EN": 13240, "DA": 2368, "EL": 6994, "AR": 6839, "TR": 25021}
    splits = [
        (lang, tuple(ex(f"{lang}{i}", language=lang) for i in range(n)))
        for lang, n in sizes.items()
    ]
    merged = concatenate_corpora(splits, seed=1)
    assert len(merged) == 54462


def test_concatenate_rejects_empty():
    with pytest.raises(ContractError):
        concatenate_corpora([], seed=0)
    with pytest.raises(ContractError):
        concatenate_corpora([("EN", ())], seed=0)


# ---------------------------------------------------------------------------
# summaries and synthetic corpora
# ---------------------------------------------------------------------------

def test_summary_counts_synthetic_corpus():
    corpus = generate_synthetic_corpus("SYNTHETIC_A", 10, 5, 5, seed=0)
    rows = corpus_summary(CorpusCatalog.of([corpus]))
    assert len(rows) == 1
    row = rows[0]
    assert (row.language, row.train_size, row.dev_size, row.test_size) == (
        "SYNTHETIC_A", 10, 5, 5,
    )
    assert row.train_offensive_share == 0.5
    assert "SYNTHETIC_A" in summary_markdown(rows)


def test_summary_rejects_empty_catalog():
    with pytest.raises(ContractError):
        corpus_summary(CorpusCatalog())


def test_synthetic_labels_match_lexicon_presence():
    vocab = synthetic_vocabulary("SYNTHETIC_A")
    corpus = generate_synthetic_corpus("SYNTHETIC_A", 40, 10, 10, seed=2)
    lexicon = set(vocab.lexicon)
    for split in (corpus.train, corpus.dev, corpus.test):
        for example in split:
            has_bad = any(word in lexicon for word in example.text.split())
            assert has_bad == (example.label is Label.OFFENSIVE)


def test_synthetic_languages_have_disjoint_vocabularies():
    vocab_a = synthetic_vocabulary("SYNTHETIC_A")
    vocab_b = synthetic_vocabulary("SYNTHETIC_B")
    tokens_a = set(vocab_a.filler) | set(vocab_a.lexicon)
    tokens_b = set(vocab_b.filler) | set(vocab_b.lexicon)
    assert not tokens_a & tokens_b


def test_synthetic_fixture_tokens_hash_without_collision():
    # guards the desk fixtures: distinct words must stay distinct under the
    # hashing tokenizer's id space used by DESK_MODEL
    from helpers import DESK_MODEL

    tokens = set()
    for lang in ("SYNTHETIC_A", "SYNTHETIC_B", "SYNTHETIC_C"):
        vocab = synthetic_vocabulary(lang)
        tokens |= set(vocab.filler) | set(vocab.lexicon)
    ids = {hash_token_id(tok, DESK_MODEL.vocab_size) for tok in tokens}
    assert len(ids) == len(tokens)


def test_synthetic_generation_deterministic():
    one = generate_synthetic_corpus("SYNTHETIC_A", 20, 6, 6, seed=9)
    two = generate_synthetic_corpus("SYNTHETIC_A", 20, 6, 6, seed=9)
    assert one == two
