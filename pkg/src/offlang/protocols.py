"""The experiment protocols: monolingual, joint, zero-shot, few-shot,
augmentation.

Each run fine-tunes a fresh classifier (seeded from the training config, so
identical spec + seed + data reproduce identical metrics), evaluates it with
macro-F1, and is captured as an immutable RunRecord. Records persist as one
JSON file each under the experiment's output directory, named by spec hash,
training languages, test language and seed; persistence is append-only and
refuses to overwrite unless forced.

Independent runs (matrix cells, few-shot fractions) share no mutable state
and may execute concurrently; all their randomness flows through run-local
generators.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .classifier import (
    Checkpoint,
    ModelConfig,
    TrainingConfig,
    build_classifier,
    evaluate_checkpoint,
    fine_tune,
)
from .corpus import (
    CorpusCatalog,
    LabeledExample,
    concatenate_corpora,
    generate_synthetic_corpus,
    language_sort_key,
    load_corpus,
    slice_fraction,
    validate_language,
)
from .errors import ContractError, NoRecordsError, PersistCollisionError
from .metrics import MetricsReport

EXPERIMENT_KINDS = (
    "monolingual",
    "joint_all",
    "zero_shot_matrix",
    "few_shot_curve",
    "augmentation",
)

DEFAULT_FRACTIONS = tuple(round(0.05 * k, 2) for k in range(1, 21))

JOINT_ROW_LABEL = "ALL"


def canonical_hash(document: dict) -> str:
    """sha256 of the canonical JSON form; insensitive to key order."""
    payload = json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Data source description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DataSpec:
    """Where the catalog comes from: OLID-style TSV directories per language,
    or generated synthetic corpora for desk-scale runs."""

    kind: str
    paths: dict | None = None
    languages: tuple[str, ...] | None = None
    train_size: int = 48
    dev_size: int = 16
    test_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.kind == "olid_tsv":
            if not self.paths:
                raise ContractError("olid_tsv data requires a language->directory map")
            for language in self.paths:
                validate_language(language)
        elif self.kind == "synthetic":
            if not self.languages:
                raise ContractError("synthetic data requires a language list")
            object.__setattr__(self, "languages", tuple(self.languages))
            for language in self.languages:
                validate_language(language)
        else:
            raise ContractError(f"unknown data kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "paths": dict(self.paths) if self.paths else None,
            "languages": list(self.languages) if self.languages else None,
            "train_size": self.train_size,
            "dev_size": self.dev_size,
            "test_size": self.test_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DataSpec":
        data = dict(data)
        if data.get("languages"):
            data["languages"] = tuple(data["languages"])
        return cls(**data)


def build_catalog(data: DataSpec) -> CorpusCatalog:
    if data.kind == "olid_tsv":
        corpora = [
            load_corpus(path, language)
            for language, path in sorted(data.paths.items(), key=lambda kv: language_sort_key(kv[0]))
        ]
    else:
        corpora = [
            generate_synthetic_corpus(
                language,
                train_size=data.train_size,
                dev_size=data.dev_size,
                test_size=data.test_size,
                seed=data.seed + index,
            )
            for index, language in enumerate(data.languages)
        ]
    return CorpusCatalog.of(corpora)


# ---------------------------------------------------------------------------
# Experiment specs and run records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    train_languages: tuple[str, ...]
    test_languages: tuple[str, ...]
    model: ModelConfig
    training: TrainingConfig
    output_dir: str
    data: DataSpec
    fractions: tuple[float, ...] | None = None
    augment_base: str | None = None
    augment_with: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "train_languages", tuple(self.train_languages))
        object.__setattr__(self, "test_languages", tuple(self.test_languages))
        if self.fractions is not None:
            object.__setattr__(self, "fractions", tuple(self.fractions))
        self.validate()

    def validate(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ContractError(
                f"unknown experiment kind {self.kind!r}; expected one of {EXPERIMENT_KINDS}"
            )
        for language in (*self.train_languages, *self.test_languages):
            validate_language(language)
        if not self.train_languages or not self.test_languages:
            raise ContractError("train_languages and test_languages must be non-empty")
        if not self.output_dir:
            raise ContractError("output_dir must be set")

        if self.kind == "few_shot_curve":
            if not self.fractions:
                raise ContractError("few_shot_curve requires fractions")
            validate_fractions(self.fractions)
            if len(self.train_languages) > 2:
                raise ContractError(
                    "few_shot_curve takes a base language plus at most one helper"
                )
            if self.test_languages != (self.train_languages[0],):
                raise ContractError(
                    "few_shot_curve evaluates on its base language only"
                )
        elif self.fractions is not None:
            raise ContractError(f"fractions are only valid for few_shot_curve, not {self.kind!r}")

        if self.kind == "augmentation":
            if not self.augment_base or not self.augment_with:
                raise ContractError("augmentation requires augment_base and augment_with")
            if self.augment_base == self.augment_with:
                raise ContractError("augment_base and augment_with must differ")
            if set(self.train_languages) != {self.augment_base, self.augment_with}:
                raise ContractError(
                    "augmentation train_languages must be exactly the base and helper"
                )
            if self.test_languages != (self.augment_base,):
                raise ContractError("augmentation evaluates on its base language only")
        elif self.augment_base or self.augment_with:
            raise ContractError("augment_* fields are only valid for augmentation")

        if self.kind == "monolingual":
            if len(self.train_languages) != 1:
                raise ContractError("monolingual takes exactly one training language")
            if tuple(self.test_languages) != tuple(self.train_languages):
                raise ContractError("monolingual evaluates on its own language")
        if self.kind in ("joint_all", "zero_shot_matrix") and len(self.train_languages) < 2:
            raise ContractError(f"{self.kind} requires at least two languages")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "train_languages": list(self.train_languages),
            "test_languages": list(self.test_languages),
            "model": self.model.to_dict(),
            "training": self.training.to_dict(),
            "output_dir": self.output_dir,
            "data": self.data.to_dict(),
            "fractions": list(self.fractions) if self.fractions is not None else None,
            "augment_base": self.augment_base,
            "augment_with": self.augment_with,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        data["model"] = ModelConfig.from_dict(data["model"])
        data["training"] = TrainingConfig.from_dict(data["training"])
        data["data"] = DataSpec.from_dict(data["data"])
        if data.get("fractions") is not None:
            data["fractions"] = tuple(data["fractions"])
        return cls(**data)


def validate_fractions(fractions: Sequence[float]) -> None:
    previous = 0.0
    for fraction in fractions:
        if not 0.0 < fraction <= 1.0:
            raise ContractError(f"fraction {fraction} outside (0, 1]")
        if fraction <= previous:
            raise ContractError("fractions must be strictly increasing")
        previous = fraction


def spec_hash(spec: ExperimentSpec) -> str:
    return canonical_hash(spec.to_dict())


@dataclass(frozen=True)
class RunRecord:
    """Persisted outcome of one train/evaluate cell."""

    spec_hash: str
    kind: str
    train_languages: tuple[str, ...]
    test_language: str
    fraction: float | None
    metrics: MetricsReport
    checkpoint_ref: str | None
    wall_time: float
    seed: int
    train_size: int
    train_data_hash: str

    def identity_view(self) -> dict:
        """All reproducibility-relevant fields (timing and local paths are
        incidental and excluded)."""
        data = self.to_dict()
        data.pop("wall_time")
        data.pop("checkpoint_ref")
        return data

    def to_dict(self) -> dict:
        return {
            "spec_hash": self.spec_hash,
            "kind": self.kind,
            "train_languages": list(self.train_languages),
            "test_language": self.test_language,
            "fraction": self.fraction,
            "metrics": self.metrics.to_dict(),
            "checkpoint_ref": self.checkpoint_ref,
            "wall_time": self.wall_time,
            "seed": self.seed,
            "train_size": self.train_size,
            "train_data_hash": self.train_data_hash,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        data = dict(data)
        data["train_languages"] = tuple(data["train_languages"])
        data["metrics"] = MetricsReport.from_dict(data["metrics"])
        return cls(**data)


@dataclass(frozen=True)
class ResultsMatrix:
    """Macro-F1 grid: training settings (languages plus the joint row) by
    test languages. Always complete: (n + 1) x n for n languages."""

    row_labels: tuple[str, ...]
    column_labels: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]
    records: tuple[RunRecord, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.values) != len(self.row_labels):
            raise ContractError("matrix rows do not match row labels")
        for row in self.values:
            if len(row) != len(self.column_labels):
                raise ContractError("matrix row width does not match column labels")
            for value in row:
                if not math.isfinite(value):
                    raise ContractError("matrix cells must be finite")

    def cell(self, row_label: str, column_label: str) -> float:
        return self.values[self.row_labels.index(row_label)][
            self.column_labels.index(column_label)
        ]

    def to_csv(self) -> str:
        lines = ["train_setting," + ",".join(self.column_labels)]
        for label, row in zip(self.row_labels, self.values):
            lines.append(label + "," + ",".join(f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def run_name(record: RunRecord) -> str:
    parts = [
        record.spec_hash[:12],
        "+".join(record.train_languages),
        record.test_language,
        f"s{record.seed}",
    ]
    if record.fraction is not None:
        parts.append(f"f{record.fraction:g}")
    return "_".join(parts)


def persist_run(record: RunRecord, output_dir: str | Path, force: bool = False) -> Path:
    """Append-only write of one record. An existing file for the same run is
    a refusal error unless `force` is set."""
    directory = Path(output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{run_name(record)}.json"
    if path.exists() and not force:
        raise PersistCollisionError(
            f"run record already exists (use force to overwrite): {path}",
            existing_path=str(path),
        )
    with path.open("w", encoding="utf-8") as fh:
        json.dump(record.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_run_records(directory: str | Path) -> tuple[RunRecord, ...]:
    """All run records under `directory`, in deterministic filename order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NoRecordsError(f"results directory not found: {directory}")
    records = []
    for path in sorted(directory.glob("*.json")):
        if path.name in ("partial_manifest.json", "spec.json"):
            continue
        with path.open(encoding="utf-8") as fh:
            records.append(RunRecord.from_dict(json.load(fh)))
    return tuple(records)


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------

def _effective_hash(
    kind: str,
    train_languages: Sequence[str],
    test_language: str,
    fraction: float | None,
    model: ModelConfig,
    training: TrainingConfig,
    train_data_hash: str,
) -> str:
    return canonical_hash(
        {
            "kind": kind,
            "train_languages": sorted(train_languages),
            "test_language": test_language,
            "fraction": fraction,
            "model": model.to_dict(),
            "training": training.to_dict(),
            "train_data_hash": train_data_hash,
        }
    )


def _train_once(
    train: Sequence[LabeledExample],
    dev: Sequence[LabeledExample],
    model: ModelConfig,
    training: TrainingConfig,
) -> Checkpoint:
    handle = build_classifier(model, seed=training.seed)
    return fine_tune(handle, train, dev, training)


def _finish_record(
    *,
    kind: str,
    checkpoint: Checkpoint,
    test_language: str,
    test_examples: Sequence[LabeledExample],
    training: TrainingConfig,
    model: ModelConfig,
    fraction: float | None,
    started: float,
    train_size: int,
    spec_hash_value: str | None,
    output_dir: str | Path | None,
    force: bool,
    shared_checkpoint_ref: str | None = None,
) -> RunRecord:
    metrics = evaluate_checkpoint(checkpoint, test_examples)
    resolved_hash = spec_hash_value or _effective_hash(
        kind,
        checkpoint.training_languages,
        test_language,
        fraction,
        model,
        training,
        checkpoint.train_data_hash,
    )
    record = RunRecord(
        spec_hash=resolved_hash,
        kind=kind,
        train_languages=tuple(sorted(checkpoint.training_languages, key=language_sort_key)),
        test_language=test_language,
        fraction=fraction,
        metrics=metrics,
        checkpoint_ref=None,
        wall_time=time.perf_counter() - started,
        seed=training.seed,
        train_size=train_size,
        train_data_hash=checkpoint.train_data_hash,
    )
    if output_dir is not None:
        if shared_checkpoint_ref is None:
            checkpoint_dir = Path(output_dir) / "checkpoints" / run_name(record)
            checkpoint.save(checkpoint_dir)
            ref = str(checkpoint_dir)
        else:
            ref = shared_checkpoint_ref
        record = dataclasses.replace(record, checkpoint_ref=ref)
        persist_run(record, output_dir, force=force)
    return record


def run_monolingual(
    language: str,
    catalog: CorpusCatalog,
    model: ModelConfig,
    training: TrainingConfig,
    *,
    output_dir: str | Path | None = None,
    force: bool = False,
    spec_hash_value: str | None = None,
    kind: str = "monolingual",
) -> RunRecord:
    """Fine-tune on one language's training set and evaluate on its test set."""
    corpus = catalog.get(language)
    started = time.perf_counter()
    checkpoint = _train_once(corpus.train, corpus.dev, model, training)
    return _finish_record(
        kind=kind,
        checkpoint=checkpoint,
        test_language=language,
        test_examples=corpus.test,
        training=training,
        model=model,
        fraction=None,
        started=started,
        train_size=len(corpus.train),
        spec_hash_value=spec_hash_value,
        output_dir=output_dir,
        force=force,
    )


def run_joint_all(
    catalog: CorpusCatalog,
    model: ModelConfig,
    training: TrainingConfig,
    *,
    train_languages: Sequence[str] | None = None,
    test_languages: Sequence[str] | None = None,
    output_dir: str | Path | None = None,
    force: bool = False,
    spec_hash_value: str | None = None,
) -> tuple[RunRecord, ...]:
    """Train one checkpoint on the concatenation of all training sets (dev
    sets concatenated likewise) and evaluate it on every test set."""
    train_langs = tuple(train_languages or catalog.languages)
    test_langs = tuple(test_languages or catalog.languages)
    if len(train_langs) < 2:
        raise ContractError("joint training requires at least two languages")
    train = concatenate_corpora(
        [(lang, catalog.get(lang).train) for lang in train_langs], seed=training.seed
    )
    dev = concatenate_corpora(
        [(lang, catalog.get(lang).dev) for lang in train_langs], seed=training.seed
    )
    started = time.perf_counter()
    checkpoint = _train_once(train, dev, model, training)
    shared_ref = None
    if output_dir is not None:
        tag = "+".join(sorted(train_langs, key=language_sort_key))
        checkpoint_dir = Path(output_dir) / "checkpoints" / f"joint_{tag}_s{training.seed}"
        checkpoint.save(checkpoint_dir)
        shared_ref = str(checkpoint_dir)
    records = []
    for language in test_langs:
        records.append(
            _finish_record(
                kind="joint_all",
                checkpoint=checkpoint,
                test_language=language,
                test_examples=catalog.get(language).test,
                training=training,
                model=model,
                fraction=None,
                started=started,
                train_size=len(train),
                spec_hash_value=spec_hash_value,
                output_dir=output_dir,
                force=force,
                shared_checkpoint_ref=shared_ref,
            )
        )
    return tuple(records)


# ---------------------------------------------------------------------------
# Grids and curves
# ---------------------------------------------------------------------------

def _run_parallel(tasks: Sequence[Callable[[], object]], jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [future.result() for future in futures]


def _write_partial_manifest(output_dir: str | Path, records: Sequence[RunRecord], error: Exception) -> None:
    manifest = {
        "completed": [run_name(r) for r in records],
        "error": f"{type(error).__name__}: {error}",
    }
    path = Path(output_dir) / "partial_manifest.json"
    with path.open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_zero_shot_matrix(
    catalog: CorpusCatalog,
    model: ModelConfig,
    training: TrainingConfig,
    *,
    output_dir: str | Path | None = None,
    force: bool = False,
    spec_hash_value: str | None = None,
    jobs: int = 1,
) -> ResultsMatrix:
    """Train one checkpoint per language, evaluate each on every test set,
    and append the joint row. A training failure aborts the grid after
    writing a partial-results manifest."""
    languages = catalog.languages
    if len(languages) < 2:
        raise ContractError("the transfer matrix requires at least two languages")

    completed: list[RunRecord] = []

    def monolingual_row(train_language: str) -> list[RunRecord]:
        corpus = catalog.get(train_language)
        started = time.perf_counter()
        checkpoint = _train_once(corpus.train, corpus.dev, model, training)
        shared_ref = None
        if output_dir is not None:
            checkpoint_dir = (
                Path(output_dir) / "checkpoints" / f"mono_{train_language}_s{training.seed}"
            )
            checkpoint.save(checkpoint_dir)
            shared_ref = str(checkpoint_dir)
        row = []
        for test_language in languages:
            record = _finish_record(
                kind="zero_shot",
                checkpoint=checkpoint,
                test_language=test_language,
                test_examples=catalog.get(test_language).test,
                training=training,
                model=model,
                fraction=None,
                started=started,
                train_size=len(corpus.train),
                spec_hash_value=spec_hash_value,
                output_dir=output_dir,
                force=force,
                shared_checkpoint_ref=shared_ref,
            )
            row.append(record)
            completed.append(record)
        return row

    try:
        rows = _run_parallel([lambda lang=lang: monolingual_row(lang) for lang in languages], jobs)
        joint_records = run_joint_all(
            catalog,
            model,
            training,
            output_dir=output_dir,
            force=force,
            spec_hash_value=spec_hash_value,
        )
        completed.extend(joint_records)
    except Exception as error:
        if output_dir is not None:
            _write_partial_manifest(output_dir, completed, error)
        raise

    values = tuple(
        tuple(row[j].metrics.macro_f1 for j in range(len(languages))) for row in rows
    ) + (tuple(r.metrics.macro_f1 for r in joint_records),)
    ordered = tuple(record for row in rows for record in row) + tuple(joint_records)
    matrix = ResultsMatrix(
        row_labels=(*languages, JOINT_ROW_LABEL),
        column_labels=languages,
        values=values,
        records=ordered,
    )
    if output_dir is not None:
        matrix_path = Path(output_dir) / "matrix.csv"
        matrix_path.write_text(matrix.to_csv(), encoding="utf-8")
    return matrix


def run_few_shot_curve(
    base_language: str,
    helper_language: str | None,
    fractions: Sequence[float],
    catalog: CorpusCatalog,
    model: ModelConfig,
    training: TrainingConfig,
    *,
    output_dir: str | Path | None = None,
    force: bool = False,
    spec_hash_value: str | None = None,
    jobs: int = 1,
) -> tuple[RunRecord, ...]:
    """Learning curve over base-language fractions, optionally augmented with
    the helper language's full training set; evaluated on the base test set.

    A fraction of 1.0 with no helper reproduces the monolingual run exactly
    (same seed, same training data and order).
    """
    if helper_language == base_language:
        raise ContractError("helper language must differ from the base language")
    fractions = tuple(fractions)
    validate_fractions(fractions)
    base = catalog.get(base_language)
    helper = catalog.get(helper_language) if helper_language else None

    def one_fraction(fraction: float) -> RunRecord:
        train_slice = slice_fraction(base.train, fraction, training.seed)
        if helper is not None:
            train_set = concatenate_corpora(
                [(base_language, train_slice), (helper.language, helper.train)],
                seed=training.seed,
            )
        else:
            train_set = train_slice
        started = time.perf_counter()
        checkpoint = _train_once(train_set, base.dev, model, training)
        return _finish_record(
            kind="few_shot",
            checkpoint=checkpoint,
            test_language=base_language,
            test_examples=base.test,
            training=training,
            model=model,
            fraction=fraction,
            started=started,
            train_size=len(train_set),
            spec_hash_value=spec_hash_value,
            output_dir=output_dir,
            force=force,
        )

    records = tuple(
        _run_parallel([lambda f=f: one_fraction(f) for f in fractions], jobs)
    )
    if output_dir is not None:
        write_fewshot_csv(records, Path(output_dir) / "fewshot.csv")
    return records


def write_fewshot_csv(records: Sequence[RunRecord], path: Path) -> Path:
    """fewshot.csv: one line per few-shot record (fraction, helper, macro-F1)."""
    lines = ["fraction,helper,macro_f1"]
    for record in records:
        if record.fraction is None:
            continue
        helpers = [l for l in record.train_languages if l != record.test_language]
        helper = "+".join(helpers) if helpers else "none"
        lines.append(f"{record.fraction:g},{helper},{record.metrics.macro_f1:.6f}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def run_augmentation(
    base_language: str,
    helper_language: str,
    catalog: CorpusCatalog,
    model: ModelConfig,
    training: TrainingConfig,
    *,
    output_dir: str | Path | None = None,
    force: bool = False,
    spec_hash_value: str | None = None,
) -> RunRecord:
    """Train on base + helper training sets combined, evaluate on base test."""
    if base_language == helper_language:
        raise ContractError("augmentation requires two distinct languages")
    base = catalog.get(base_language)
    helper = catalog.get(helper_language)
    train = concatenate_corpora(
        [(base_language, base.train), (helper_language, helper.train)],
        seed=training.seed,
    )
    started = time.perf_counter()
    checkpoint = _train_once(train, base.dev, model, training)
    return _finish_record(
        kind="augmentation",
        checkpoint=checkpoint,
        test_language=base_language,
        test_examples=base.test,
        training=training,
        model=model,
        fraction=None,
        started=started,
        train_size=len(train),
        spec_hash_value=spec_hash_value,
        output_dir=output_dir,
        force=force,
    )


# ---------------------------------------------------------------------------
# Spec execution
# ---------------------------------------------------------------------------

def execute_spec(
    spec: ExperimentSpec,
    catalog: CorpusCatalog | None = None,
    *,
    force: bool = False,
    jobs: int = 1,
) -> tuple[RunRecord, ...]:
    """Run a declarative experiment spec end to end.

    Builds the catalog from the spec's data section unless one is supplied,
    persists every record (and the spec itself) under spec.output_dir, and
    returns the records.
    """
    catalog = catalog or build_catalog(spec.data)
    shash = spec_hash(spec)
    output_dir = Path(spec.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    spec_path = output_dir / "spec.json"
    if not spec_path.exists() or force:
        with spec_path.open("w", encoding="utf-8") as fh:
            json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    common = dict(output_dir=output_dir, force=force, spec_hash_value=shash)
    if spec.kind == "monolingual":
        record = run_monolingual(
            spec.train_languages[0], catalog, spec.model, spec.training, **common
        )
        return (record,)
    if spec.kind == "joint_all":
        return run_joint_all(
            catalog,
            spec.model,
            spec.training,
            train_languages=spec.train_languages,
            test_languages=spec.test_languages,
            **common,
        )
    if spec.kind == "zero_shot_matrix":
        matrix = run_zero_shot_matrix(
            catalog, spec.model, spec.training, jobs=jobs, **common
        )
        return matrix.records
    if spec.kind == "few_shot_curve":
        base = spec.train_languages[0]
        helper = spec.train_languages[1] if len(spec.train_languages) > 1 else None
        return run_few_shot_curve(
            base, helper, spec.fractions, catalog, spec.model, spec.training,
            jobs=jobs, **common,
        )
    if spec.kind == "augmentation":
        record = run_augmentation(
            spec.augment_base, spec.augment_with, catalog, spec.model, spec.training,
            **common,
        )
        return (record,)
    raise ContractError(f"unknown experiment kind {spec.kind!r}")
