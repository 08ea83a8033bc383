"""Declarative experiment configs: JSON documents validated into
ExperimentSpec values.

A config names the experiment kind, the languages, the data source, and the
output directory; model and training sections are optional and default to the
reference fine-tuning recipe (10 epochs, batch 32, peak rate 5e-5, 10% linear
warm-up). Command-line overrides use dotted ``key=value`` paths
(``training.epochs=2``) with JSON-typed values and are applied before
validation; unknown keys are rejected up front.

parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import json
from pathlib import Path

from .classifier import ModelConfig, TrainingConfig
from .errors import ConfigError, ContractError
from .protocols import DEFAULT_FRACTIONS, DataSpec, ExperimentSpec

_TOP_LEVEL_KEYS = {
    "kind",
    "train_languages",
    "test_languages",
    "model",
    "training",
    "output_dir",
    "data",
    "fractions",
    "augment_base",
    "augment_with",
}
_SECTION_KEYS = {
    "model": set(ModelConfig().to_dict()),
    "training": set(TrainingConfig().to_dict()),
    "data": {"kind", "paths", "languages", "train_size", "dev_size", "test_size", "seed"},
}
_REQUIRED_KEYS = ("kind", "train_languages", "test_languages", "output_dir", "data")

_EXPECTED_TYPES = {
    "kind": (str, "string"),
    "train_languages": (list, "list of language codes"),
    "test_languages": (list, "list of language codes"),
    "model": (dict, "object"),
    "training": (dict, "object"),
    "output_dir": (str, "string"),
    "data": (dict, "object"),
    "fractions": (list, "list of numbers in (0, 1]"),
    "augment_base": (str, "string"),
    "augment_with": (str, "string"),
}


def _reject_unknown_keys(document: dict) -> None:
    for key in document:
        if key not in _TOP_LEVEL_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
    for section, allowed in _SECTION_KEYS.items():
        body = document.get(section)
        if isinstance(body, dict):
            for key in body:
                if key not in allowed:
                    raise ConfigError(f"unknown config key {section!r}.{key!r}")


def _check_types(document: dict) -> None:
    for key, value in document.items():
        if value is None:
            continue
        expected_type, expected_name = _EXPECTED_TYPES[key]
        if not isinstance(value, expected_type) or isinstance(value, bool):
            raise ConfigError(
                f"config key {key!r} has the wrong type: expected {expected_name}, "
                f"got {type(value).__name__}"
            )
    for key in _REQUIRED_KEYS:
        if key not in document or document[key] is None:
            expected = _EXPECTED_TYPES[key][1]
            raise ConfigError(f"missing required config key {key!r} (expected {expected})")


def parse_override(assignment: str) -> tuple[str, object]:
    """Parse one ``dotted.key=value`` override; values are JSON literals with
    a bare-string fallback."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, _, raw = assignment.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError(f"override {assignment!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _validate_override_key(key: str) -> None:
    parts = key.split(".")
    if parts[0] not in _TOP_LEVEL_KEYS:
        raise ConfigError(f"unknown override key {key!r}")
    if len(parts) == 1:
        return
    if len(parts) == 2 and parts[0] in _SECTION_KEYS:
        if parts[1] in _SECTION_KEYS[parts[0]]:
            return
    raise ConfigError(f"unknown override key {key!r}")


def apply_overrides(document: dict, overrides: list[str] | tuple[str, ...]) -> dict:
    document = json.loads(json.dumps(document))  # deep copy, JSON-typed
    for assignment in overrides:
        key, value = parse_override(assignment)
        _validate_override_key(key)
        parts = key.split(".")
        target = document
        for part in parts[:-1]:
            if not isinstance(target.get(part), dict):
                target[part] = {}
            target = target[part]
        target[parts[-1]] = value
    return document


def spec_from_document(document: dict) -> ExperimentSpec:
    _reject_unknown_keys(document)
    _check_types(document)
    try:
        model = ModelConfig.from_dict(document.get("model") or {})
        training = TrainingConfig.from_dict(document.get("training") or {})
        data = DataSpec.from_dict(document["data"])
        fractions = document.get("fractions")
        if fractions is None and document["kind"] == "few_shot_curve":
            fractions = list(DEFAULT_FRACTIONS)
        return ExperimentSpec(
            kind=document["kind"],
            train_languages=tuple(document["train_languages"]),
            test_languages=tuple(document["test_languages"]),
            model=model,
            training=training,
            output_dir=document["output_dir"],
            data=data,
            fractions=tuple(fractions) if fractions is not None else None,
            augment_base=document.get("augment_base"),
            augment_with=document.get("augment_with"),
        )
    except TypeError as err:
        raise ConfigError(f"malformed config section: {err}") from err
    except ContractError as err:
        raise ConfigError(str(err)) from err


def parse_experiment_config(
    path: str | Path, overrides: list[str] | tuple[str, ...] = ()
) -> ExperimentSpec:
    """Load, override and validate an experiment config document."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open(encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    if not isinstance(document, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    document = apply_overrides(document, overrides)
    return spec_from_document(document)


def serialize_spec(spec: ExperimentSpec) -> str:
    """Canonical JSON form of a spec; parsing it back yields an equal spec."""
    return json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n"
