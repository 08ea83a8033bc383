"""Exception hierarchy shared by all offlang modules.

Every error that can surface through the CLI carries a short machine-parsable
category and a process exit code. The mapping is part of the public contract:

    0  success
    1  unexpected internal error
    2  contract violation (bad argument to a library operation, CLI usage)
    3  ingestion failure (missing/malformed dataset files)
    4  training divergence (non-finite loss)
    5  persistence collision (refusing to overwrite an existing run record)
    6  pretrained encoder unavailable
    7  no run records found where some were required
    8  experiment config schema violation
"""

from __future__ import annotations


class HarnessError(Exception):
    """Base class for all categorized offlang errors."""

    category = "internal"
    exit_code = 1


class ContractError(HarnessError):
    """An argument violated an operation's precondition or a type invariant."""

    category = "contract"
    exit_code = 2


class IngestionError(HarnessError):
    """Dataset files are missing or do not follow the expected TSV layout."""

    category = "ingestion"
    exit_code = 3


class DivergenceError(HarnessError):
    """Training produced a non-finite loss."""

    category = "divergence"
    exit_code = 4

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class PersistCollisionError(HarnessError):
    """A run record already exists at the target path and force was not set."""

    category = "collision"
    exit_code = 5

    def __init__(self, message: str, existing_path: str):
        super().__init__(message)
        self.existing_path = existing_path


class EncoderUnavailableError(HarnessError):
    """The requested pretrained encoder checkpoint could not be obtained."""

    category = "encoder"
    exit_code = 6


class NoRecordsError(HarnessError):
    """A results directory contained no persisted run records."""

    category = "no-records"
    exit_code = 7


class ConfigError(HarnessError):
    """An experiment config document violated the schema."""

    category = "config"
    exit_code = 8
