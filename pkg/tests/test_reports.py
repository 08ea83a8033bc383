from __future__ import annotations

import pytest

from offlang import NoRecordsError, persist_run
from offlang.metrics import ConfusionMatrix, MetricsReport
from offlang.protocols import RunRecord
from offlang.reports import emit_report

from oracles import check_html_document

LANGUAGES = ("EN", "DA", "EL", "AR", "TR")

# full-scale reference scores for the five-language transfer grid; used here
# purely as rendering fixtures
REFERENCE_MATRIX = {
    "EN": (0.895, 0.646, 0.573, 0.473, 0.555),
    "DA": (0.713, 0.740, 0.473, 0.473, 0.463),
    "EL": (0.436, 0.499, 0.840, 0.446, 0.498),
    "AR": (0.432, 0.486, 0.502, 0.859, 0.490),
    "TR": (0.431, 0.501, 0.499, 0.545, 0.766),
    "ALL": (0.899, 0.772, 0.815, 0.840, 0.773),
}

REFERENCE_AUGMENTATION = {
    "EN": 0.733,
    "EL": 0.720,
    "TR": 0.697,
    "AR": 0.792,
}


def fake_report(value: float) -> MetricsReport:
    return MetricsReport(
        macro_f1=value,
        f1_offensive=value,
        f1_not_offensive=value,
        confusion=ConfusionMatrix(tp=5, fp=2, fn=1, tn=8),
        n=16,
    )


def fake_record(kind, train, test, value, fraction=None, seed=0) -> RunRecord:
    return RunRecord(
        spec_hash="c" * 64,
        kind=kind,
        train_languages=tuple(train),
        test_language=test,
        fraction=fraction,
        metrics=fake_report(value),
        checkpoint_ref=None,
        wall_time=0.5,
        seed=seed,
        train_size=100,
        train_data_hash="d" * 64,
    )


@pytest.fixture()
def reference_results(tmp_path):
    results = tmp_path / "results"
    for train_setting, row in REFERENCE_MATRIX.items():
        for language, value in zip(LANGUAGES, row):
            if train_setting == "ALL":
                record = fake_record("joint_all", LANGUAGES, language, value)
            else:
                record = fake_record("zero_shot", (train_setting,), language, value)
            persist_run(record, results)
    for helper, value in REFERENCE_AUGMENTATION.items():
        persist_run(fake_record("augmentation", ("DA", helper), "DA", value), results)
    for k in range(1, 21):
        fraction = round(0.05 * k, 2)
        persist_run(
            fake_record("few_shot", ("DA",), "DA", 0.4 + 0.015 * k, fraction=fraction)
        , results)
        persist_run(
            fake_record("few_shot", ("DA", "EN"), "DA", 0.55 + 0.01 * k, fraction=fraction)
        , results)
    return results


def test_csv_matrix_contains_reference_joint_row(reference_results):
    written = emit_report(reference_results, "csv")
    matrix_csv = next(p for p in written if p.name == "matrix.csv").read_text()
    lines = matrix_csv.splitlines()
    assert lines[0] == "train_setting,EN,DA,EL,AR,TR"
    joint = next(line for line in lines if line.startswith("ALL,"))
    assert joint == "ALL,0.899000,0.772000,0.815000,0.840000,0.773000"
    assert len(lines) == 7  # header + 5 monolingual + joint


def test_csv_augmentation_table(reference_results):
    written = emit_report(reference_results, "csv")
    table = next(p for p in written if p.name == "augmentation.csv").read_text()
    assert "DA + AR,0.792000" in table
    assert "DA + TR,0.697000" in table


def test_markdown_highlights_best_per_column(reference_results):
    written = emit_report(reference_results, "markdown_table")
    text = written[0].read_text()
    assert "**0.899**" in text  # joint row is best on EN
    assert "**0.859**" in text  # AR monolingual best on AR
    assert text.count("| ALL |") == 1


def test_markdown_desk_matrix_fully_populated(tmp_path):
    results = tmp_path / "desk"
    for train in ("SYNTHETIC_A", "SYNTHETIC_B"):
        for test in ("SYNTHETIC_A", "SYNTHETIC_B"):
            persist_run(fake_record("zero_shot", (train,), test, 0.5), results)
    for test in ("SYNTHETIC_A", "SYNTHETIC_B"):
        persist_run(
            fake_record("joint_all", ("SYNTHETIC_A", "SYNTHETIC_B"), test, 0.9), results
        )
    written = emit_report(results, "markdown_table")
    lines = written[0].read_text().splitlines()
    table_rows = [l for l in lines if l.startswith("|") and "---" not in l]
    assert len(table_rows) == 4  # header + 3 training settings
    assert all(l.count("|") == 4 for l in table_rows)
    assert not any("| |" in l.replace("|  |", "| |") for l in table_rows[1:])


def test_report_deterministic_bytes(reference_results, tmp_path):
    first = emit_report(reference_results, "csv", tmp_path / "one")
    second = emit_report(reference_results, "csv", tmp_path / "two")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
    html_one = emit_report(reference_results, "html", tmp_path / "h1")[0].read_bytes()
    html_two = emit_report(reference_results, "html", tmp_path / "h2")[0].read_bytes()
    assert html_one == html_two
    md_one = emit_report(reference_results, "markdown_table", tmp_path / "m1")[0].read_bytes()
    md_two = emit_report(reference_results, "markdown_table", tmp_path / "m2")[0].read_bytes()
    assert md_one == md_two


def test_html_report_is_conformant(reference_results):
    written = emit_report(reference_results, "html")
    assert check_html_document(written[0].read_text()) == []


def test_png_plot_emits_fewshot_curves_and_confusions(reference_results):
    written = emit_report(reference_results, "png_plot")
    names = {p.name for p in written}
    assert "fewshot_curves.png" in names
    assert any(name.startswith("confusion_ALL_") for name in names)
    for path in written:
        assert path.stat().st_size > 0
        assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_png_plot_deterministic(reference_results, tmp_path):
    one = emit_report(reference_results, "png_plot", tmp_path / "p1")
    two = emit_report(reference_results, "png_plot", tmp_path / "p2")
    for a, b in zip(one, two):
        assert a.read_bytes() == b.read_bytes()


def test_multi_seed_records_render_mean_and_spread(tmp_path):
    results = tmp_path / "seeds"
    persist_run(fake_record("monolingual", ("EN",), "EN", 0.80, seed=0), results)
    persist_run(fake_record("monolingual", ("EN",), "EN", 0.90, seed=1), results)
    written = emit_report(results, "markdown_table")
    text = written[0].read_text()
    assert "0.850 ±0.050" in text


def test_empty_results_dir_raises(tmp_path):
    empty = tmp_path / "results"
    empty.mkdir()
    with pytest.raises(NoRecordsError):
        emit_report(empty, "csv")


def test_unknown_format_rejected(reference_results):
    from offlang.errors import ContractError

    with pytest.raises(ContractError):
        emit_report(reference_results, "pdf")
