"""Command-line orchestration.

Commands:

    ingest      validate OLID-style TSV files and print a corpus summary
    train       run a monolingual or joint experiment from a config
    evaluate    score a saved checkpoint on a config's test languages
    matrix      run the full transfer matrix
    fewshot     run the few-shot learning curve
    augment     run one augmentation experiment
    attribute   explain predictions with Integrated Gradients
    report      render persisted run records into tables and figures

Experiment commands take a JSON config (see `config`); ``--set key=value``
overrides are applied before validation and ``--seed`` overrides the training
seed. ``--repeat N`` reruns a desk experiment across N consecutive seeds so
reports can show mean and spread. Errors exit with the documented per-category
codes (see `errors`) and print a single machine-parsable line to stderr.

The ``OFFLANG_ENCODER_CACHE`` environment variable sets the cache directory
for pretrained encoder downloads.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click

from .attribution import (
    AttributionConfig,
    collect_false_positives,
    integrated_gradients,
    render_html_report,
    render_importance,
)
from .classifier import Checkpoint, evaluate_checkpoint
from .config import parse_experiment_config
from .corpus import (
    CorpusCatalog,
    Label,
    LabeledExample,
    corpus_summary,
    load_corpus,
    summary_markdown,
    write_corpus,
)
from .errors import ConfigError, ContractError, HarnessError
from .protocols import RunRecord, build_catalog, execute_spec
from .reports import REPORT_FORMATS, emit_report

COMMANDS = (
    "ingest",
    "train",
    "evaluate",
    "matrix",
    "fewshot",
    "augment",
    "attribute",
    "report",
)

_KIND_BY_COMMAND = {
    "train": ("monolingual", "joint_all"),
    "matrix": ("zero_shot_matrix",),
    "fewshot": ("few_shot_curve",),
    "augment": ("augmentation",),
}


@dataclass(frozen=True)
class CliInvocation:
    command: str
    config_path: str | None = None
    overrides: tuple[str, ...] = ()
    seed: int | None = None
    force: bool = False
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ContractError(f"unknown command {self.command!r}")


def dispatch(invocation: CliInvocation) -> int:
    """Run one invocation; returns the process exit status."""
    try:
        _execute(invocation)
        return 0
    except HarnessError as err:
        click.echo(f"error {err.category}: {err}", err=True)
        return err.exit_code
    except Exception as err:  # anything uncategorized still gets one line
        click.echo(f"error internal: {type(err).__name__}: {err}", err=True)
        return 1


def _load_spec(invocation: CliInvocation):
    if not invocation.config_path:
        raise ConfigError(f"{invocation.command} requires --config")
    overrides = list(invocation.overrides)
    if invocation.seed is not None:
        overrides.append(f"training.seed={invocation.seed}")
    return parse_experiment_config(invocation.config_path, overrides)


def _summarize_records(records) -> None:
    for record in records:
        train = "+".join(record.train_languages)
        fraction = f" f={record.fraction:g}" if record.fraction is not None else ""
        click.echo(
            f"{record.kind} train={train} test={record.test_language}{fraction} "
            f"macro_f1={record.metrics.macro_f1:.4f}"
        )


def _run_experiment(invocation: CliInvocation) -> None:
    spec = _load_spec(invocation)
    allowed = _KIND_BY_COMMAND[invocation.command]
    if spec.kind not in allowed:
        raise ConfigError(
            f"command {invocation.command!r} expects kind in {allowed}, "
            f"config says {spec.kind!r}"
        )
    jobs = int(invocation.options.get("jobs") or 1)
    repeat = int(invocation.options.get("repeat") or 1)
    catalog = build_catalog(spec.data)
    all_records: list[RunRecord] = []
    for offset in range(repeat):
        run_spec = spec
        if offset > 0:
            run_spec = dataclasses.replace(
                spec, training=dataclasses.replace(spec.training, seed=spec.training.seed + offset)
            )
        all_records.extend(
            execute_spec(run_spec, catalog, force=invocation.force, jobs=jobs)
        )
    _summarize_records(all_records)
    click.echo(f"{len(all_records)} run record(s) under {spec.output_dir}")


def _ingest(invocation: CliInvocation) -> None:
    data_dir = invocation.options.get("data_dir")
    language = invocation.options.get("language")
    if not data_dir or not language:
        raise ConfigError("ingest requires --data-dir and --language")
    corpus = load_corpus(data_dir, language)
    catalog = CorpusCatalog.of([corpus])
    click.echo(summary_markdown(corpus_summary(catalog)), nl=False)
    out = invocation.options.get("out")
    if out:
        write_corpus(corpus, out)
        click.echo(f"wrote normalized splits to {out}")


def _evaluate(invocation: CliInvocation) -> None:
    checkpoint_dir = invocation.options.get("checkpoint")
    if not checkpoint_dir:
        raise ConfigError("evaluate requires --checkpoint")
    spec = _load_spec(invocation)
    checkpoint = Checkpoint.load(checkpoint_dir)
    catalog = build_catalog(spec.data)
    for language in spec.test_languages:
        report = evaluate_checkpoint(checkpoint, catalog.get(language).test)
        click.echo(
            f"evaluate test={language} macro_f1={report.macro_f1:.4f} "
            f"f1_off={report.f1_offensive:.4f} f1_not={report.f1_not_offensive:.4f}"
        )


def _attribute(invocation: CliInvocation) -> None:
    options = invocation.options
    checkpoint_dir = options.get("checkpoint")
    if not checkpoint_dir:
        raise ConfigError("attribute requires --checkpoint")
    checkpoint = Checkpoint.load(checkpoint_dir)
    attr_config = AttributionConfig(num_steps=int(options.get("steps") or 50))
    render_format = options.get("format") or "terminal"
    if render_format not in ("terminal", "html"):
        raise ConfigError(f"unknown attribution format {render_format!r}")
    color = not options.get("no_color", False)

    text = options.get("input_text")
    false_positives = options.get("false_positives")
    if (text is None) == (false_positives is None):
        raise ConfigError("attribute requires exactly one of --input or --false-positives")

    if text is not None:
        language = sorted(checkpoint.training_languages)[0]
        example = LabeledExample(
            id="cli-input", text=text, label=Label.NOT_OFFENSIVE, language=language
        )
        result = integrated_gradients(checkpoint, example, attr_config)
        result = dataclasses.replace(result, gold_label=None)
        results = [result]
    else:
        spec = _load_spec(invocation)
        catalog = build_catalog(spec.data)
        split = catalog.get(spec.test_languages[0]).test
        hits = collect_false_positives(checkpoint, split, int(false_positives))
        if not hits:
            click.echo("no false positives found")
            return
        results = [integrated_gradients(checkpoint, ex, attr_config) for ex, _ in hits]

    if render_format == "html":
        document = render_html_report(results)
        out = options.get("out")
        if out:
            Path(out).write_text(document, encoding="utf-8")
            click.echo(f"wrote {out}")
        else:
            click.echo(document, nl=False)
    else:
        for result in results:
            click.echo(render_importance(result, "terminal", color=color), nl=False)


def _report(invocation: CliInvocation) -> None:
    results_dir = invocation.options.get("results_dir")
    if not results_dir:
        raise ConfigError("report requires --results-dir")
    report_format = invocation.options.get("format") or "csv"
    written = emit_report(results_dir, report_format, invocation.options.get("out"))
    for path in written:
        click.echo(f"wrote {path}")


def _execute(invocation: CliInvocation) -> None:
    if invocation.command in _KIND_BY_COMMAND:
        _run_experiment(invocation)
    elif invocation.command == "ingest":
        _ingest(invocation)
    elif invocation.command == "evaluate":
        _evaluate(invocation)
    elif invocation.command == "attribute":
        _attribute(invocation)
    elif invocation.command == "report":
        _report(invocation)
    else:  # unreachable: CliInvocation validates the command
        raise ContractError(f"unknown command {invocation.command!r}")


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

@click.group()
@click.version_option(package_name="offlang")
def main():
    """Multilingual offensive-language detection experiment harness."""


def _experiment_command(name: str, help_text: str):
    @main.command(name=name, help=help_text)
    @click.option("--config", "config_path", required=True, type=click.Path())
    @click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
    @click.option("--seed", type=int, default=None)
    @click.option("--jobs", type=int, default=1, show_default=True)
    @click.option("--repeat", type=int, default=1, show_default=True,
                  help="Re-run across N consecutive seeds.")
    @click.option("--force", is_flag=True, help="Overwrite existing run records.")
    def command(config_path, overrides, seed, jobs, repeat, force):
        invocation = CliInvocation(
            command=name,
            config_path=config_path,
            overrides=tuple(overrides),
            seed=seed,
            force=force,
            options={"jobs": jobs, "repeat": repeat},
        )
        sys.exit(dispatch(invocation))

    return command


_experiment_command("train", "Run a monolingual or joint training experiment.")
_experiment_command("matrix", "Run the cross-lingual transfer matrix.")
_experiment_command("fewshot", "Run the few-shot learning curve.")
_experiment_command("augment", "Run one augmentation experiment.")


@main.command()
@click.option("--data-dir", "data_dir", required=True, type=click.Path())
@click.option("--language", required=True)
@click.option("--out", type=click.Path(), default=None,
              help="Also write the normalized splits here.")
def ingest(data_dir, language, out):
    """Validate OLID-style TSV files and print a summary row."""
    invocation = CliInvocation(
        command="ingest", options={"data_dir": data_dir, "language": language, "out": out}
    )
    sys.exit(dispatch(invocation))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--seed", type=int, default=None)
def evaluate(config_path, checkpoint, overrides, seed):
    """Score a saved checkpoint on the config's test languages."""
    invocation = CliInvocation(
        command="evaluate",
        config_path=config_path,
        overrides=tuple(overrides),
        seed=seed,
        options={"checkpoint": checkpoint},
    )
    sys.exit(dispatch(invocation))


@main.command()
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--input", "input_text", default=None, help="Attribute one text.")
@click.option("--false-positives", "false_positives", type=int, default=None,
              help="Attribute the N most confident false positives (needs --config).")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--format", "render_format", type=click.Choice(["terminal", "html"]),
              default="terminal", show_default=True)
@click.option("--steps", type=int, default=50, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Write HTML here.")
@click.option("--no-color", is_flag=True, help="Plain-text terminal rendering.")
def attribute(checkpoint, input_text, false_positives, config_path, render_format,
              steps, out, no_color):
    """Explain predictions with Integrated Gradients."""
    invocation = CliInvocation(
        command="attribute",
        config_path=config_path,
        options={
            "checkpoint": checkpoint,
            "input_text": input_text,
            "false_positives": false_positives,
            "format": render_format,
            "steps": steps,
            "out": out,
            "no_color": no_color,
        },
    )
    sys.exit(dispatch(invocation))


@main.command()
@click.option("--results-dir", "results_dir", required=True, type=click.Path())
@click.option("--format", "report_format", type=click.Choice(list(REPORT_FORMATS)),
              default="csv", show_default=True)
@click.option("--out", type=click.Path(), default=None)
def report(results_dir, report_format, out):
    """Render persisted run records into tables and figures."""
    invocation = CliInvocation(
        command="report",
        options={"results_dir": results_dir, "format": report_format, "out": out},
    )
    sys.exit(dispatch(invocation))


if __name__ == "__main__":
    main()
