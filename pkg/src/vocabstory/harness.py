"""Batch study-session simulation: generate, enforce, verify, aggregate.

A run simulates ``n_stories`` independent sessions.  Each story gets its
own seed derived from the master seed by a counter hash, so reruns with
the same seed and transcript reproduce the report byte-for-byte (run
reports deliberately carry no wall-clock data).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .errors import DegenerateSample, VocabStoryError
from .evalkit import (
    AggregateRow,
    MetricsRecord,
    aggregate,
    count_metrics,
    emit_table_tsv,
    judge_story,
    t_test_unpaired,
)
from .gateway import Gateway
from .lexicon import Language, LemmaTable, LevelTag, Lexicon, allowed_set
from .pipeline import RewriteStrategy, Strategy, enforce_constraints, generate_story
from .srs import Card, Deck, SessionMode, SessionPlan, plan_session
from .textcheck import verify_story

DEFAULT_N_STORIES = 200
DEFAULT_N_NEW = 10
MIXED_N_NEW = 3
MIXED_N_REVIEW = 7


@dataclass
class ExperimentConfig:
    language: Language
    learner_level: str
    strategy: str = Strategy.SIMPLE
    rewrite_strategy: str = RewriteStrategy.NONE
    n_stories: int = DEFAULT_N_STORIES
    n_new: int = DEFAULT_N_NEW
    n_review: int = 0
    mode: str = SessionMode.NEW_ONLY
    rng_seed: int = 0
    judge: bool = False

    def __post_init__(self):
        if self.n_stories < 1:
            raise ValueError("n_stories must be >= 1")
        if self.mode == SessionMode.MIXED and self.n_review == 0:
            self.n_new = MIXED_N_NEW
            self.n_review = MIXED_N_REVIEW


def derive_seed(master_seed: int, index: int) -> int:
    blob = f"{master_seed}:{index}".encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


@dataclass
class StoryOutcome:
    index: int
    seed: int
    plan_new: list[str]
    plan_review: list[str]
    story: str
    iterations_used: int
    metrics: MetricsRecord


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    outcomes: list[StoryOutcome]
    aggregate_row: AggregateRow
    failure_count: int
    failures: list[dict] = field(default_factory=list)
    transcript_hash: str | None = None

    @property
    def metrics(self) -> list[MetricsRecord]:
        return [o.metrics for o in self.outcomes]


def _seed_mixed_reviews(deck: Deck, known: frozenset[str], n_review: int, rng_seed: int, now):
    """Give the simulated learner ``n_review`` due cards over known words."""
    import random

    rng = random.Random(rng_seed ^ 0x5EED)
    pool = sorted(known)
    for word in rng.sample(pool, min(n_review, len(pool))):
        deck.upsert(
            Card(word=word, language=deck.language, due_at=now, history=((now, 4),))
        )


def run_story(
    config: ExperimentConfig,
    plan: SessionPlan,
    gateway: Gateway,
    known: frozenset[str],
    lemma_table: LemmaTable,
    judge_gateway: Gateway | None = None,
) -> StoryOutcome:
    """One session: generate, enforce constraints, verify, compute metrics."""
    allowed = known | set(plan.all_targets)
    story, history = generate_story(config.strategy, plan, gateway)
    trace = enforce_constraints(
        story,
        allowed,
        plan.all_targets,
        config.rewrite_strategy,
        gateway,
        config.language,
        lemma_table,
        history=history,
        strategy=config.strategy,
    )
    tokenized, report = verify_story(
        trace.final_story, frozenset(allowed), frozenset(plan.all_targets),
        config.language, lemma_table,
    )
    metrics = count_metrics(report, tokenized, plan)
    if config.judge and judge_gateway is not None:
        for aspect in ("gram", "coh", "int"):
            grade, _ = judge_story(trace.final_story, aspect, judge_gateway)
            metrics.judge_scores[aspect] = grade
    return StoryOutcome(
        index=0,
        seed=0,
        plan_new=list(plan.new_words),
        plan_review=list(plan.review_words),
        story=trace.final_story,
        iterations_used=trace.iterations_used,
        metrics=metrics,
    )


def run_experiment(
    config: ExperimentConfig,
    gateway: Gateway,
    lexicon: Lexicon,
    lemma_table: LemmaTable,
    judge_gateway: Gateway | None = None,
    transcript_hash: str | None = None,
) -> ExperimentReport:
    level = LevelTag.parse(lexicon.scheme, config.learner_level)
    known = allowed_set(lexicon, level)
    now = datetime(2000, 1, 1)
    outcomes: list[StoryOutcome] = []
    failures: list[dict] = []
    for i in range(config.n_stories):
        seed = derive_seed(config.rng_seed, i)
        deck = Deck(language=config.language.value, learner_level=level)
        if config.mode == SessionMode.MIXED:
            _seed_mixed_reviews(deck, known, config.n_review, seed, now)
        try:
            plan = plan_session(
                deck, lexicon, config.mode, config.n_new, config.n_review, seed, now=now
            )
            outcome = run_story(config, plan, gateway, known, lemma_table, judge_gateway)
            outcome.index = i
            outcome.seed = seed
            outcomes.append(outcome)
        except VocabStoryError as exc:
            failures.append({"index": i, "seed": seed, "error": type(exc).__name__,
                             "message": str(exc)})
    if not outcomes:
        raise VocabStoryError(f"all {config.n_stories} stories failed")
    return ExperimentReport(
        config=config,
        outcomes=outcomes,
        aggregate_row=aggregate([o.metrics for o in outcomes]),
        failure_count=len(failures),
        failures=failures,
        transcript_hash=transcript_hash,
    )


METRIC_FIELDS = {
    "gram": lambda m: m.judge_scores.get("gram"),
    "coh": lambda m: m.judge_scores.get("coh"),
    "int": lambda m: m.judge_scores.get("int"),
    "num_l": lambda m: m.mean_target_occurrences,
    "len": lambda m: float(m.length),
    "oov": lambda m: m.oov_fraction,
    "introduced": lambda m: m.introduced_fraction,
}


def metric_values(report: ExperimentReport, metric: str) -> list[float]:
    getter = METRIC_FIELDS[metric]
    return [v for v in (getter(m) for m in report.metrics) if v is not None]


def compare_variants(
    named_reports: list[tuple[str, ExperimentReport]], metric: str
) -> dict[tuple[str, str], float | None]:
    """Upper-triangular matrix of two-sided p-values on one metric column."""
    matrix: dict[tuple[str, str], float | None] = {}
    for i, (name_a, rep_a) in enumerate(named_reports):
        for name_b, rep_b in named_reports[i + 1 :]:
            try:
                result = t_test_unpaired(
                    metric_values(rep_a, metric), metric_values(rep_b, metric)
                )
                matrix[(name_a, name_b)] = result.p_value
            except DegenerateSample:
                matrix[(name_a, name_b)] = None
    return matrix


def emit_pvalue_matrix(names: list[str], matrix: dict[tuple[str, str], float | None]) -> str:
    """Aligned text rendering: p-values above the diagonal, '-' elsewhere."""
    rows = []
    for i, a in enumerate(names):
        cells = []
        for j, b in enumerate(names):
            if j <= i:
                cells.append("-")
            else:
                p = matrix.get((a, b))
                cells.append("n/a" if p is None else f"{p:.3f}")
        rows.append([a, *cells])
    header = ["", *names]
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join(fmt.format(*r).rstrip() for r in [header, *rows]) + "\n"


def _metrics_to_dict(m: MetricsRecord) -> dict:
    return {
        "mean_target_occurrences": m.mean_target_occurrences,
        "introduced_fraction": m.introduced_fraction,
        "length": m.length,
        "oov_fraction": m.oov_fraction,
        "length_per_occurrence": m.length_per_occurrence,
        "judge_scores": m.judge_scores,
    }


def report_to_json(report: ExperimentReport, name: str = "run") -> str:
    cfg = report.config
    payload = {
        "name": name,
        "config": {
            "language": cfg.language.value,
            "learner_level": cfg.learner_level,
            "strategy": cfg.strategy,
            "rewrite_strategy": cfg.rewrite_strategy,
            "n_stories": cfg.n_stories,
            "n_new": cfg.n_new,
            "n_review": cfg.n_review,
            "mode": cfg.mode,
            "rng_seed": cfg.rng_seed,
            "judge": cfg.judge,
        },
        "transcript_hash": report.transcript_hash,
        "stories": [
            {
                "index": o.index,
                "seed": o.seed,
                "new_words": o.plan_new,
                "review_words": o.plan_review,
                "iterations_used": o.iterations_used,
                "metrics": _metrics_to_dict(o.metrics),
            }
            for o in report.outcomes
        ],
        "failures": report.failures,
        "failure_count": report.failure_count,
        "aggregate": {
            "mean_target_occurrences": report.aggregate_row.mean_target_occurrences,
            "introduced_fraction": report.aggregate_row.introduced_fraction,
            "mean_length": report.aggregate_row.mean_length,
            "oov_fraction": report.aggregate_row.oov_fraction,
            "length_per_occurrence": report.aggregate_row.length_per_occurrence,
            "judge_means": report.aggregate_row.judge_means,
            "n_records": report.aggregate_row.n_records,
        },
    }
    return json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def write_report(report: ExperimentReport, out_dir: str | Path, name: str = "run") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.json").write_text(report_to_json(report, name), encoding="utf-8")
    table = emit_table_tsv([(name, report.aggregate_row)])
    (out / f"{name}.tsv").write_text(table, encoding="utf-8")
    with open(out / f"{name}.stories.jsonl", "w", encoding="utf-8") as f:
        for o in report.outcomes:
            f.write(
                json.dumps(
                    {
                        "index": o.index,
                        "seed": o.seed,
                        "new_words": o.plan_new,
                        "review_words": o.plan_review,
                        "story": o.story,
                        "iterations_used": o.iterations_used,
                        "metrics": _metrics_to_dict(o.metrics),
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def transcript_file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
