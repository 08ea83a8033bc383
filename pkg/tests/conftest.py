from __future__ import annotations

import pytest

from offlang import CorpusCatalog, TrainingConfig, generate_synthetic_corpus
from offlang.classifier import build_classifier, fine_tune

from helpers import DESK_MODEL


@pytest.fixture(scope="session")
def synthetic_pair() -> CorpusCatalog:
    """Two synthetic languages with disjoint vocabularies."""
    return CorpusCatalog.of(
        [
            generate_synthetic_corpus("SYNTHETIC_A", 64, 16, 32, seed=11),
            generate_synthetic_corpus("SYNTHETIC_B", 64, 16, 32, seed=12),
        ]
    )


@pytest.fixture(scope="session")
def overfit_run():
    """A desk encoder overfit on a 32-example corpus (shared across tests)."""
    corpus = generate_synthetic_corpus("SYNTHETIC_A", 32, 8, 16, seed=5)
    training = TrainingConfig(epochs=50, batch_size=8, peak_learning_rate=3e-3, seed=5)
    handle = build_classifier(DESK_MODEL, seed=5)
    checkpoint = fine_tune(handle, corpus.train, corpus.dev, training)
    return corpus, checkpoint


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                lines.append((nodeid.split("::")[-1], status))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{name}: {status.upper()}")
