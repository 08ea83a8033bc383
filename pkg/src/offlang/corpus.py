"""Corpus ingestion, normalization, slicing and combination.

The unit of data is a tweet-sized text with a binary offensiveness label and a
language tag. Real datasets arrive as OLID-style TSV files (header row,
``id<TAB>tweet<TAB>subtask_a``, labels ``OFF``/``NOT``); test sets may ship
their labels in a separate two-column ``id<TAB>label`` file. Synthetic
languages, used for desk-scale experiments and tests, are first-class: their
offensive class is defined by the presence of a token from a per-language
lexicon, and distinct synthetic languages use disjoint vocabularies.

All corpus values are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import csv
import math
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, IngestionError

# The five core languages, in the fixed order used for all deterministic
# iteration (catalog listings, summary tables, matrix rows).
CORE_LANGUAGES = ("EN", "DA", "EL", "AR", "TR")

_SYNTHETIC_RE = re.compile(r"^SYNTHETIC_[A-Z0-9_]+$")


class Label(Enum):
    """Binary offensiveness label. Values match the TSV vocabulary."""

    OFFENSIVE = "OFF"
    NOT_OFFENSIVE = "NOT"


def parse_label(token: str) -> Label:
    try:
        return Label(token)
    except ValueError:
        raise IngestionError(
            f"unknown label token {token!r}; expected one of OFF, NOT"
        ) from None


def validate_language(code: str) -> str:
    """Return `code` if it is a core language or a SYNTHETIC_* tag."""
    if code in CORE_LANGUAGES or _SYNTHETIC_RE.match(code):
        return code
    raise ContractError(
        f"unknown language {code!r}; expected one of {CORE_LANGUAGES} or SYNTHETIC_*"
    )


def language_sort_key(code: str) -> tuple[int, str]:
    """Fixed iteration order: core languages first (EN, DA, EL, AR, TR), then
    synthetic languages sorted by name."""
    if code in CORE_LANGUAGES:
        return (CORE_LANGUAGES.index(code), "")
    return (len(CORE_LANGUAGES), code)


@dataclass(frozen=True)
class LabeledExample:
    """One text with its binary label and language tag."""

    id: str
    text: str
    label: Label
    language: str

    def __post_init__(self):
        if not self.text:
            raise ContractError(f"example {self.id!r} has empty text")
        if not isinstance(self.label, Label):
            raise ContractError(f"example {self.id!r} label must be a Label")
        validate_language(self.language)


def _check_unique_ids(examples: Sequence[LabeledExample], where: str) -> None:
    seen: set[str] = set()
    for ex in examples:
        if ex.id in seen:
            raise ContractError(f"duplicate id {ex.id!r} in {where}")
        seen.add(ex.id)


@dataclass(frozen=True)
class LanguageCorpus:
    """Train/dev/test splits for one language. Splits are disjoint by id."""

    language: str
    train: tuple[LabeledExample, ...]
    dev: tuple[LabeledExample, ...]
    test: tuple[LabeledExample, ...]

    def __post_init__(self):
        validate_language(self.language)
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "dev", tuple(self.dev))
        object.__setattr__(self, "test", tuple(self.test))
        ids = {}
        for name in ("train", "dev", "test"):
            split = getattr(self, name)
            _check_unique_ids(split, f"{self.language} {name} split")
            ids[name] = {ex.id for ex in split}
        for a, b in (("train", "dev"), ("train", "test"), ("dev", "test")):
            overlap = ids[a] & ids[b]
            if overlap:
                raise ContractError(
                    f"{self.language}: splits {a} and {b} share ids "
                    f"{sorted(overlap)[:5]}"
                )

    def split(self, name: str) -> tuple[LabeledExample, ...]:
        if name not in ("train", "dev", "test"):
            raise ContractError(f"unknown split {name!r}")
        return getattr(self, name)


@dataclass(frozen=True)
class CorpusCatalog:
    """Registry of at most one LanguageCorpus per language.

    Iteration is deterministic: core languages in fixed order, then synthetic
    languages by name.
    """

    entries: dict[str, LanguageCorpus] = field(default_factory=dict)

    def __post_init__(self):
        for code, corpus in self.entries.items():
            if corpus.language != code:
                raise ContractError(
                    f"catalog key {code!r} does not match corpus language "
                    f"{corpus.language!r}"
                )

    @classmethod
    def of(cls, corpora: Iterable[LanguageCorpus]) -> "CorpusCatalog":
        entries: dict[str, LanguageCorpus] = {}
        for corpus in corpora:
            if corpus.language in entries:
                raise ContractError(
                    f"catalog already contains language {corpus.language!r}"
                )
            entries[corpus.language] = corpus
        return cls(entries)

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(sorted(self.entries, key=language_sort_key))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, language: str) -> bool:
        return language in self.entries

    def get(self, language: str) -> LanguageCorpus:
        if language not in self.entries:
            raise ContractError(f"catalog has no corpus for language {language!r}")
        return self.entries[language]

    def __iter__(self):
        for code in self.languages:
            yield self.entries[code]


# ---------------------------------------------------------------------------
# Text normalization
# ---------------------------------------------------------------------------

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")


def normalize_text(raw: str) -> str:
    """Minimal normalization applied to every ingested text.

    NFC unicode normalization, URLs replaced by the literal token ``URL``,
    whitespace runs collapsed to single spaces, ends stripped. The datasets'
    existing ``@USER`` mention placeholders are left untouched. Returns the
    empty string for whitespace-only input; callers that require non-empty
    text are responsible for flagging it.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _URL_RE.sub("URL", text)
    text = _WS_RE.sub(" ", text)
    return text.strip()


# ---------------------------------------------------------------------------
# TSV ingestion
# ---------------------------------------------------------------------------

SPLIT_FILES = {"train": "train.tsv", "dev": "dev.tsv", "test": "test.tsv"}
TEST_LABELS_FILE = "test_labels.tsv"


def _read_tsv_rows(path: Path, split: str) -> list[list[str]]:
    if not path.is_file():
        raise IngestionError(f"{split} split file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise IngestionError(f"{split} split file is empty: {path}")
    return rows


def _parse_split(
    rows: list[list[str]], language: str, split: str, labels: dict[str, Label] | None
) -> tuple[LabeledExample, ...]:
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise IngestionError(
            f"{language} {split}: expected a header row with at least "
            f"id and tweet columns, got {header!r}"
        )
    examples: list[LabeledExample] = []
    seen: set[str] = set()
    for row in body:
        if len(row) < 2:
            raise IngestionError(f"{language} {split}: malformed row {row!r}")
        row_id, text = row[0].strip(), row[1]
        if row_id in seen:
            raise IngestionError(f"{language} {split}: duplicate id {row_id!r}")
        seen.add(row_id)
        if labels is not None:
            if row_id not in labels:
                raise IngestionError(
                    f"{language} {split}: id {row_id!r} missing from the label file"
                )
            label = labels[row_id]
        else:
            if len(row) < 3:
                raise IngestionError(
                    f"{language} {split}: row {row_id!r} has no label column and "
                    f"no separate label file was found"
                )
            try:
                label = parse_label(row[2].strip())
            except IngestionError as err:
                raise IngestionError(f"{language} {split}: row {row_id!r}: {err}") from None
        normalized = normalize_text(text)
        if not normalized:
            raise IngestionError(
                f"{language} {split}: row {row_id!r} is empty after normalization"
            )
        examples.append(
            LabeledExample(id=row_id, text=normalized, label=label, language=language)
        )
    return tuple(examples)


def _read_label_file(path: Path, language: str) -> dict[str, Label]:
    rows = _read_tsv_rows(path, "test labels")
    labels: dict[str, Label] = {}
    for i, row in enumerate(rows):
        if len(row) < 2:
            raise IngestionError(f"{language} test labels: malformed row {row!r}")
        row_id, token = row[0].strip(), row[1].strip()
        if i == 0 and token not in (lbl.value for lbl in Label):
            continue  # header row
        if row_id in labels:
            raise IngestionError(f"{language} test labels: duplicate id {row_id!r}")
        try:
            labels[row_id] = parse_label(token)
        except IngestionError as err:
            raise IngestionError(f"{language} test labels: row {row_id!r}: {err}") from None
    return labels


def load_corpus(path: str | Path, language: str, format: str = "olid_tsv") -> LanguageCorpus:
    """Load one language's train/dev/test splits from a directory.

    The directory must contain ``train.tsv``, ``dev.tsv`` and ``test.tsv``
    (header row, ``id<TAB>tweet<TAB>subtask_a``). If ``test.tsv`` has no label
    column, labels are read from ``test_labels.tsv`` (``id<TAB>label``).
    """
    if format != "olid_tsv":
        raise ContractError(f"unsupported corpus format {format!r}")
    validate_language(language)
    root = Path(path)
    if not root.is_dir():
        raise IngestionError(f"corpus directory not found: {root}")

    splits: dict[str, tuple[LabeledExample, ...]] = {}
    for split, filename in SPLIT_FILES.items():
        rows = _read_tsv_rows(root / filename, f"{language} {split}")
        labels = None
        if split == "test":
            has_inline = len(rows[0]) >= 3
            if not has_inline:
                labels = _read_label_file(root / TEST_LABELS_FILE, language)
        splits[split] = _parse_split(rows, language, split, labels)
    return LanguageCorpus(language=language, **splits)


def write_corpus(corpus: LanguageCorpus, path: str | Path) -> Path:
    """Write a corpus back to the OLID-style TSV layout (labels inline)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for split, filename in SPLIT_FILES.items():
        with (root / filename).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, delimiter="\t", quoting=csv.QUOTE_NONE, escapechar="\\")
            writer.writerow(["id", "tweet", "subtask_a"])
            for ex in corpus.split(split):
                writer.writerow([ex.id, ex.text, ex.label.value])
    return root


# ---------------------------------------------------------------------------
# Slicing and combination
# ---------------------------------------------------------------------------

def slice_fraction(
    corpus_split: Sequence[LabeledExample], fraction: float, seed: int
) -> tuple[LabeledExample, ...]:
    """Deterministic stratified subsample of a split.

    Takes ceil(fraction * N) examples. Per-class counts start at
    ceil(fraction * N_class) and are trimmed (largest class first, ties by
    label order OFFENSIVE then NOT_OFFENSIVE) until they sum to the total.
    Output preserves the original split order. fraction == 1.0 returns the
    split unchanged.
    """
    if not corpus_split:
        raise ContractError("cannot slice an empty split")
    if not 0.0 < fraction <= 1.0:
        raise ContractError(f"fraction must be in (0, 1], got {fraction}")
    split = tuple(corpus_split)
    if fraction == 1.0:
        return split

    target = math.ceil(fraction * len(split))
    by_class: dict[Label, list[int]] = {lbl: [] for lbl in Label}
    for idx, ex in enumerate(split):
        by_class[ex.label].append(idx)
    take = {
        lbl: math.ceil(fraction * len(idxs)) for lbl, idxs in by_class.items() if idxs
    }
    while sum(take.values()) > target:
        largest = max(take, key=lambda lbl: (take[lbl], -list(Label).index(lbl)))
        take[largest] -= 1

    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for lbl in Label:
        if lbl not in take:
            continue
        idxs = by_class[lbl]
        order = rng.permutation(len(idxs))
        chosen.extend(idxs[i] for i in order[: take[lbl]])
    chosen.sort()
    return tuple(split[i] for i in chosen)


def concatenate_corpora(
    splits: Sequence[tuple[str, Sequence[LabeledExample]]], seed: int
) -> tuple[LabeledExample, ...]:
    """Multiset union of several splits, shuffled deterministically by seed.

    Examples keep their own language tags; the per-entry language is used only
    for error reporting.
    """
    if not splits:
        raise ContractError("concatenate_corpora requires at least one input")
    pooled: list[LabeledExample] = []
    for language, examples in splits:
        validate_language(language)
        pooled.extend(examples)
    if not pooled:
        raise ContractError("concatenate_corpora inputs are all empty")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pooled))
    return tuple(pooled[i] for i in order)


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusSummaryRow:
    language: str
    train_size: int
    dev_size: int
    test_size: int
    train_offensive_share: float
    dev_offensive_share: float
    test_offensive_share: float


def _offensive_share(examples: Sequence[LabeledExample]) -> float:
    if not examples:
        return 0.0
    n_off = sum(1 for ex in examples if ex.label is Label.OFFENSIVE)
    return n_off / len(examples)


def corpus_summary(catalog: CorpusCatalog) -> tuple[CorpusSummaryRow, ...]:
    """One row per language in fixed order, with split sizes and class balance."""
    if len(catalog) == 0:
        raise ContractError("cannot summarize an empty catalog")
    rows = []
    for corpus in catalog:
        rows.append(
            CorpusSummaryRow(
                language=corpus.language,
                train_size=len(corpus.train),
                dev_size=len(corpus.dev),
                test_size=len(corpus.test),
                train_offensive_share=_offensive_share(corpus.train),
                dev_offensive_share=_offensive_share(corpus.dev),
                test_offensive_share=_offensive_share(corpus.test),
            )
        )
    return tuple(rows)


def summary_markdown(rows: Sequence[CorpusSummaryRow]) -> str:
    lines = [
        "| language | train | dev | test | train %off | dev %off | test %off |",
        "| --- | ---: | ---: | ---: | ---: | ---: | ---: |",
    ]
    for r in rows:
        lines.append(
            f"| {r.language} | {r.train_size} | {r.dev_size} | {r.test_size} "
            f"| {r.train_offensive_share:.3f} | {r.dev_offensive_share:.3f} "
            f"| {r.test_offensive_share:.3f} |"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Synthetic desk-scale corpora
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticVocabulary:
    """Filler words plus the offensive lexicon of one synthetic language."""

    filler: tuple[str, ...]
    lexicon: tuple[str, ...]

    def __post_init__(self):
        if set(self.filler) & set(self.lexicon):
            raise ContractError("filler and lexicon words must be disjoint")


def synthetic_vocabulary(
    language: str, filler_size: int = 16, lexicon_size: int = 6
) -> SyntheticVocabulary:
    """Deterministic vocabulary for a synthetic language.

    Words are prefixed with the language tag, so distinct synthetic languages
    get disjoint vocabularies by construction.
    """
    validate_language(language)
    prefix = language.removeprefix("SYNTHETIC_").lower() or "x"
    filler = tuple(f"{prefix}flr{i}" for i in range(filler_size))
    lexicon = tuple(f"{prefix}bad{i}" for i in range(lexicon_size))
    return SyntheticVocabulary(filler=filler, lexicon=lexicon)


def _synthetic_split(
    language: str,
    vocab: SyntheticVocabulary,
    size: int,
    rng: np.random.Generator,
    id_prefix: str,
) -> tuple[LabeledExample, ...]:
    examples = []
    for i in range(size):
        offensive = i % 2 == 0  # balanced by construction
        # length is drawn independently of the label so that nothing but the
        # lexicon tokens separates the classes
        length = int(rng.integers(4, 10))
        words = [vocab.filler[int(k)] for k in rng.integers(0, len(vocab.filler), length)]
        if offensive:
            n_bad = int(rng.integers(1, 3))
            positions = rng.choice(length, size=n_bad, replace=False)
            for pos in positions:
                words[int(pos)] = vocab.lexicon[int(rng.integers(0, len(vocab.lexicon)))]
        examples.append(
            LabeledExample(
                id=f"{id_prefix}{i}",
                text=" ".join(words),
                label=Label.OFFENSIVE if offensive else Label.NOT_OFFENSIVE,
                language=language,
            )
        )
    return tuple(examples)


def generate_synthetic_corpus(
    language: str,
    train_size: int,
    dev_size: int,
    test_size: int,
    seed: int,
    vocabulary: SyntheticVocabulary | None = None,
) -> LanguageCorpus:
    """Generate a synthetic corpus where OFFENSIVE <=> a lexicon token occurs.

    Splits are balanced and deterministic for a given seed. Passing an explicit
    `vocabulary` lets two language tags share one lexicon (used to model
    compatible-signal augmentation); by default vocabularies are disjoint
    across languages.
    """
    validate_language(language)
    for name, size in (("train", train_size), ("dev", dev_size), ("test", test_size)):
        if size < 2:
            raise ContractError(f"synthetic {name} size must be >= 2, got {size}")
    vocab = vocabulary or synthetic_vocabulary(language)
    rng = np.random.default_rng(seed)
    tag = language.lower()
    return LanguageCorpus(
        language=language,
        train=_synthetic_split(language, vocab, train_size, rng, f"{tag}-tr-"),
        dev=_synthetic_split(language, vocab, dev_size, rng, f"{tag}-dv-"),
        test=_synthetic_split(language, vocab, test_size, rng, f"{tag}-te-"),
    )
