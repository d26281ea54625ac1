"""Command-line entry points: run experiments, compare variants, emit tables."""

from __future__ import annotations

import json
import os
from pathlib import Path

import click

from .evalkit import AggregateRow, emit_table_text, emit_table_tsv, t_test_unpaired
from .errors import DegenerateSample
from .gateway import Gateway, HttpBackend, RecordingBackend, ScriptedBackend
from .harness import (
    ExperimentConfig,
    run_experiment,
    transcript_file_hash,
    write_report,
)
from .lexicon import Language, load_manifest
from .pipeline import RewriteStrategy, Strategy
from .srs import SessionMode


def _build_gateway(backend: str, transcript: str | None, record_to: str | None) -> tuple[Gateway, str | None]:
    if backend == "transcript":
        if not transcript:
            raise click.UsageError("--transcript is required with --backend transcript")
        return Gateway(ScriptedBackend.from_file(transcript)), transcript_file_hash(transcript)
    url = os.environ.get("VOCABSTORY_ENDPOINT")
    if not url:
        raise click.UsageError("set VOCABSTORY_ENDPOINT for the live backend")
    inner = HttpBackend(endpoint_url=url, api_token=os.environ.get("VOCABSTORY_TOKEN"))
    if record_to:
        inner = RecordingBackend(inner, record_to)
    return Gateway(inner), None


@click.group()
def main():
    """Vocabulary-constrained story generation toolkit."""


@main.command()
@click.option("--lang", type=click.Choice([l.value for l in Language]), required=True)
@click.option("--level", required=True, help="learner level, e.g. B1 or 3")
@click.option("--strategy", type=click.Choice([Strategy.SIMPLE, Strategy.PLANNING, Strategy.EXAMPLES_FIRST]), default=Strategy.SIMPLE)
@click.option("--rewrite", type=click.Choice([RewriteStrategy.NONE, RewriteStrategy.REWRITE, RewriteStrategy.REWRITE_HIGHLIGHTED, RewriteStrategy.SYNONYMS_THEN_REWRITE]), default=RewriteStrategy.NONE)
@click.option("--stories", type=int, default=200, show_default=True)
@click.option("--mode", type=click.Choice([SessionMode.NEW_ONLY, SessionMode.MIXED]), default=SessionMode.NEW_ONLY)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--backend", type=click.Choice(["live", "transcript"]), default="transcript")
@click.option("--transcript", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--record-to", type=click.Path(dir_okay=False), default=None)
@click.option("--judge", is_flag=True, default=False)
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--name", default="run", show_default=True)
def run(lang, level, strategy, rewrite, stories, mode, seed, backend, transcript,
        record_to, judge, manifest, out, name):
    """Run a batch of simulated study sessions and write the report."""
    resources = load_manifest(manifest)
    language = Language(lang)
    res = resources[language]
    gateway, t_hash = _build_gateway(backend, transcript, record_to)
    config = ExperimentConfig(
        language=language,
        learner_level=level,
        strategy=strategy,
        rewrite_strategy=rewrite,
        n_stories=stories,
        mode=mode,
        rng_seed=seed,
        judge=judge,
    )
    judge_gateway = gateway if judge else None
    report = run_experiment(
        config, gateway, res.lexicon, res.lemma_table,
        judge_gateway=judge_gateway, transcript_hash=t_hash,
    )
    write_report(report, out, name=name)
    click.echo(f"{len(report.outcomes)} stories, {report.failure_count} failures -> {out}")


def _load_report_metrics(path: Path, metric: str) -> list[float]:
    data = json.loads(path.read_text(encoding="utf-8"))
    key = {
        "gram": ("judge_scores", "gram"),
        "coh": ("judge_scores", "coh"),
        "int": ("judge_scores", "int"),
        "num_l": ("mean_target_occurrences",),
        "len": ("length",),
        "oov": ("oov_fraction",),
        "introduced": ("introduced_fraction",),
    }[metric]
    values = []
    for story in data["stories"]:
        v = story["metrics"]
        for k in key:
            v = v.get(k) if isinstance(v, dict) else None
        if v is not None:
            values.append(float(v))
    return values


@main.command()
@click.argument("reports", nargs=-1, type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--metric", type=click.Choice(["gram", "coh", "int", "num_l", "len", "oov", "introduced"]), default="num_l")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def compare(reports, metric, out):
    """Pairwise p-value matrix across report JSON files."""
    named = [(Path(p).stem, _load_report_metrics(Path(p), metric)) for p in reports]
    names = [n for n, _ in named]
    lines = ["\t".join(["", *names])]
    for i, (a, va) in enumerate(named):
        row = [a]
        for j, (b, vb) in enumerate(named):
            if j <= i:
                row.append("-")
            else:
                try:
                    row.append(f"{t_test_unpaired(va, vb).p_value:.3f}")
                except DegenerateSample:
                    row.append("n/a")
        lines.append("\t".join(row))
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


@main.command(name="emit-table")
@click.argument("reports", nargs=-1, type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--format", "fmt", type=click.Choice(["tsv", "text"]), default="tsv")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def emit_table(reports, fmt, out):
    """Render aggregate rows from report JSON files as one table."""
    rows = []
    for p in reports:
        data = json.loads(Path(p).read_text(encoding="utf-8"))
        agg = data["aggregate"]
        rows.append(
            (
                data.get("name", Path(p).stem),
                AggregateRow(
                    mean_target_occurrences=agg["mean_target_occurrences"],
                    introduced_fraction=agg["introduced_fraction"],
                    mean_length=agg["mean_length"],
                    oov_fraction=agg["oov_fraction"],
                    length_per_occurrence=agg["length_per_occurrence"],
                    judge_means=agg["judge_means"],
                    n_records=agg["n_records"],
                    n_without_occurrences=0,
                    judge_missing={},
                ),
            )
        )
    text = emit_table_tsv(rows) if fmt == "tsv" else emit_table_text(rows)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


@main.command()
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data-dir", type=click.Path(file_okay=False), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--backend", type=click.Choice(["live", "transcript"]), default="live")
@click.option("--transcript", type=click.Path(exists=True, dir_okay=False), default=None)
def serve(manifest, data_dir, host, port, backend, transcript):
    """Run the HTTP session service."""
    import uvicorn

    from .service import ServiceConfig, SessionService, create_app

    resources = load_manifest(manifest)
    gateway, _ = _build_gateway(backend, transcript, None)
    refs = {lang.value: res for lang, res in resources.items()}
    service = SessionService(ServiceConfig(resources=refs, gateway=gateway, data_dir=data_dir))
    uvicorn.run(create_app(service), host=host, port=port)


if __name__ == "__main__":
    main()
