"""Render persisted run records into tables and figures.

Three result shapes are emitted, mirroring how the experiments are read:

* transfer matrix — training settings (one row per training language, plus
  the joint ``ALL`` row) by test languages, macro-F1 cells, best cell per
  column highlighted in the markdown/html renderings;
* augmentation table — base + helper training combinations against the base
  test set;
* few-shot curves — macro-F1 against the fraction of base-language training
  data, one line per helper setting.

When several seeds produced records for the same cell, tables show the mean
(annotated with half the min-max spread where it is nonzero). Output is a
pure function of the record set: rendering the same records twice yields
byte-identical files.
"""

from __future__ import annotations

import html as html_lib
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .corpus import language_sort_key
from .errors import ContractError, NoRecordsError
from .metrics import ConfusionMatrix
from .protocols import JOINT_ROW_LABEL, RunRecord, load_run_records

REPORT_FORMATS = ("csv", "markdown_table", "png_plot", "html")

_EVAL_KINDS = ("monolingual", "joint_all", "zero_shot")


def _train_setting(record: RunRecord) -> str:
    if record.kind == "joint_all":
        return JOINT_ROW_LABEL
    return "+".join(record.train_languages)


def _setting_sort_key(label: str) -> tuple:
    if label == JOINT_ROW_LABEL:
        return (1, ())
    return (0, tuple(language_sort_key(part) for part in label.split("+")))


class _Cell:
    __slots__ = ("values", "confusions")

    def __init__(self):
        self.values: list[float] = []
        self.confusions: list[ConfusionMatrix] = []

    def add(self, record: RunRecord) -> None:
        self.values.append(record.metrics.macro_f1)
        self.confusions.append(record.metrics.confusion)

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values)

    @property
    def half_spread(self) -> float:
        return (max(self.values) - min(self.values)) / 2

    def text(self) -> str:
        if len(self.values) > 1 and self.half_spread > 0:
            return f"{self.mean:.3f} ±{self.half_spread:.3f}"
        return f"{self.mean:.3f}"


def _matrix_cells(records: Sequence[RunRecord]) -> dict[str, dict[str, _Cell]]:
    cells: dict[str, dict[str, _Cell]] = defaultdict(dict)
    for record in records:
        if record.kind not in _EVAL_KINDS:
            continue
        row = _train_setting(record)
        cell = cells[row].setdefault(record.test_language, _Cell())
        cell.add(record)
    return cells


def _matrix_layout(cells: dict[str, dict[str, _Cell]]) -> tuple[list[str], list[str]]:
    rows = sorted(cells, key=_setting_sort_key)
    columns = sorted(
        {col for row in cells.values() for col in row}, key=language_sort_key
    )
    return rows, columns


def _best_per_column(
    cells: dict[str, dict[str, _Cell]], rows: list[str], columns: list[str]
) -> dict[str, float]:
    best = {}
    for column in columns:
        values = [cells[row][column].mean for row in rows if column in cells[row]]
        if values:
            best[column] = max(values)
    return best


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _matrix_csv(cells, rows, columns) -> str:
    lines = ["train_setting," + ",".join(columns)]
    for row in rows:
        values = [
            f"{cells[row][col].mean:.6f}" if col in cells[row] else ""
            for col in columns
        ]
        lines.append(row + "," + ",".join(values))
    return "\n".join(lines) + "\n"


def _augmentation_rows(records: Sequence[RunRecord]) -> dict[str, _Cell]:
    table: dict[str, _Cell] = {}
    for record in records:
        if record.kind != "augmentation":
            continue
        helpers = [l for l in record.train_languages if l != record.test_language]
        label = f"{record.test_language} + {'+'.join(helpers)}"
        table.setdefault(label, _Cell()).add(record)
    return table


def _augmentation_csv(table: dict[str, _Cell]) -> str:
    lines = ["training_combination,macro_f1"]
    for label in sorted(table):
        lines.append(f"{label},{table[label].mean:.6f}")
    return "\n".join(lines) + "\n"


def _fewshot_groups(records: Sequence[RunRecord]) -> dict[str, dict[float, _Cell]]:
    groups: dict[str, dict[float, _Cell]] = defaultdict(dict)
    for record in records:
        if record.kind != "few_shot" or record.fraction is None:
            continue
        helpers = [l for l in record.train_languages if l != record.test_language]
        helper = "+".join(helpers) if helpers else "none"
        groups[helper].setdefault(record.fraction, _Cell()).add(record)
    return groups


def _fewshot_csv(groups: dict[str, dict[float, _Cell]]) -> str:
    lines = ["fraction,helper,macro_f1"]
    for helper in sorted(groups):
        for fraction in sorted(groups[helper]):
            lines.append(f"{fraction:g},{helper},{groups[helper][fraction].mean:.6f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Markdown / HTML tables
# ---------------------------------------------------------------------------

def _matrix_markdown(cells, rows, columns) -> str:
    best = _best_per_column(cells, rows, columns)
    lines = [
        "| train \\ test | " + " | ".join(columns) + " |",
        "| --- |" + " ---: |" * len(columns),
    ]
    for row in rows:
        rendered = []
        for col in columns:
            if col not in cells[row]:
                rendered.append("")
                continue
            cell = cells[row][col]
            text = cell.text()
            if cell.mean == best[col]:
                text = f"**{text}**"
            rendered.append(text)
        lines.append(f"| {row} | " + " | ".join(rendered) + " |")
    return "\n".join(lines) + "\n"


def _augmentation_markdown(table: dict[str, _Cell]) -> str:
    lines = ["| training combination | macro-F1 |", "| --- | ---: |"]
    for label in sorted(table):
        lines.append(f"| {label} | {table[label].text()} |")
    return "\n".join(lines) + "\n"


def _fewshot_markdown(groups: dict[str, dict[float, _Cell]]) -> str:
    lines = ["| fraction | helper | macro-F1 |", "| ---: | --- | ---: |"]
    for helper in sorted(groups):
        for fraction in sorted(groups[helper]):
            lines.append(f"| {fraction:g} | {helper} | {groups[helper][fraction].text()} |")
    return "\n".join(lines) + "\n"


def _html_table(header: list[str], body: list[list[str]], strong: set[tuple[int, int]]) -> str:
    out = ["<table>", "<tr>" + "".join(f"<th>{html_lib.escape(h)}</th>" for h in header) + "</tr>"]
    for i, row in enumerate(body):
        cells = []
        for j, value in enumerate(row):
            text = html_lib.escape(value)
            if (i, j) in strong:
                text = f"<strong>{text}</strong>"
            cells.append(f"<td>{text}</td>")
        out.append("<tr>" + "".join(cells) + "</tr>")
    out.append("</table>")
    return "\n".join(out)


def _report_html(records: Sequence[RunRecord]) -> str:
    sections = []
    cells = _matrix_cells(records)
    if cells:
        rows, columns = _matrix_layout(cells)
        best = _best_per_column(cells, rows, columns)
        body = []
        strong = set()
        for i, row in enumerate(rows):
            line = [row]
            for j, col in enumerate(columns):
                if col in cells[row]:
                    cell = cells[row][col]
                    line.append(cell.text())
                    if cell.mean == best[col]:
                        strong.add((i, j + 1))
                else:
                    line.append("")
            body.append(line)
        sections.append(
            "<h2>Transfer matrix (macro-F1)</h2>\n"
            + _html_table(["train \\ test", *columns], body, strong)
        )
    augmentation = _augmentation_rows(records)
    if augmentation:
        body = [[label, augmentation[label].text()] for label in sorted(augmentation)]
        sections.append(
            "<h2>Augmentation</h2>\n"
            + _html_table(["training combination", "macro-F1"], body, set())
        )
    fewshot = _fewshot_groups(records)
    if fewshot:
        body = [
            [f"{fraction:g}", helper, fewshot[helper][fraction].text()]
            for helper in sorted(fewshot)
            for fraction in sorted(fewshot[helper])
        ]
        sections.append(
            "<h2>Few-shot curve</h2>\n"
            + _html_table(["fraction", "helper", "macro-F1"], body, set())
        )
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        "<title>Experiment report</title>\n"
        "<style>\nbody { font-family: sans-serif; margin: 2em; }\n"
        "table { border-collapse: collapse; margin-bottom: 2em; }\n"
        "td, th { border: 1px solid #999; padding: 4px 8px; text-align: right; }\n"
        "th:first-child, td:first-child { text-align: left; }\n</style>\n"
        "</head>\n<body>\n<h1>Experiment report</h1>\n"
        + "\n".join(sections)
        + "\n</body>\n</html>\n"
    )


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def _fewshot_figure(groups: dict[str, dict[float, _Cell]], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for helper in sorted(groups):
        fractions = sorted(groups[helper])
        means = [groups[helper][f].mean for f in fractions]
        label = "base only" if helper == "none" else f"base + {helper}"
        ax.plot(fractions, means, marker="o", label=label)
    ax.set_xlabel("fraction of base training data")
    ax.set_ylabel("macro-F1")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _confusion_figure(confusion: ConfusionMatrix, title: str, path: Path) -> None:
    counts = [[confusion.tn, confusion.fp], [confusion.fn, confusion.tp]]
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.imshow(counts, cmap="Blues")
    ax.set_xticks([0, 1], labels=["NOT", "OFF"])
    ax.set_yticks([0, 1], labels=["NOT", "OFF"])
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    ax.set_title(title)
    peak = max(max(row) for row in counts)
    for i in range(2):
        for j in range(2):
            color = "white" if peak and counts[i][j] > peak / 2 else "black"
            ax.text(j, i, str(counts[i][j]), ha="center", va="center", color=color)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def emit_report(
    results_dir: str | Path,
    format: str,
    out_dir: str | Path | None = None,
) -> list[Path]:
    """Render every table/figure supported by the records in `results_dir`.

    Returns the written paths. Raises NoRecordsError when the directory holds
    no run records.
    """
    if format not in REPORT_FORMATS:
        raise ContractError(
            f"unknown report format {format!r}; expected one of {REPORT_FORMATS}"
        )
    records = load_run_records(results_dir)
    if not records:
        raise NoRecordsError(f"no run records found in {results_dir}")
    out = Path(out_dir) if out_dir is not None else Path(results_dir) / "report"
    out.mkdir(parents=True, exist_ok=True)

    cells = _matrix_cells(records)
    augmentation = _augmentation_rows(records)
    fewshot = _fewshot_groups(records)
    written: list[Path] = []

    def write(name: str, text: str) -> None:
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    if format == "csv":
        if cells:
            rows, columns = _matrix_layout(cells)
            write("matrix.csv", _matrix_csv(cells, rows, columns))
        if augmentation:
            write("augmentation.csv", _augmentation_csv(augmentation))
        if fewshot:
            write("fewshot.csv", _fewshot_csv(fewshot))
    elif format == "markdown_table":
        parts = []
        if cells:
            rows, columns = _matrix_layout(cells)
            parts.append("## Transfer matrix (macro-F1)\n\n" + _matrix_markdown(cells, rows, columns))
        if augmentation:
            parts.append("## Augmentation\n\n" + _augmentation_markdown(augmentation))
        if fewshot:
            parts.append("## Few-shot curve\n\n" + _fewshot_markdown(fewshot))
        write("report.md", "\n".join(parts))
    elif format == "html":
        write("report.html", _report_html(records))
    elif format == "png_plot":
        if fewshot:
            path = out / "fewshot_curves.png"
            _fewshot_figure(fewshot, path)
            written.append(path)
        for record in records:
            if record.kind not in ("monolingual", "joint_all"):
                continue
            name = f"confusion_{_train_setting(record)}_{record.test_language}_s{record.seed}.png"
            title = f"{_train_setting(record)} on {record.test_language}"
            _confusion_figure(record.metrics.confusion, title, out / name)
            written.append(out / name)
    if not written:
        raise NoRecordsError(
            f"records in {results_dir} support no {format} outputs"
        )
    return written
