"""Count-based metrics, LLM-judge scoring, and the statistical tests.

Per-story metrics: mean target occurrences (#L), fraction of targets
introduced at least once, story length in tokens, out-of-vocabulary
fraction, and length per target occurrence.  Judge scores (grammar,
coherence, interestingness) are parsed from free-text replies as the last
standalone integer in 1..5.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from scipy.stats import t as t_dist

from .errors import DegenerateSample, EmptyBatch, PlanMismatch, UnparseableGrade
from .gateway import Gateway, user_request
from .pipeline import load_template, render_prompt
from .srs import SessionPlan
from .textcheck import TokenizedStory, VerificationReport

JUDGE_ASPECTS = ("gram", "coh", "int")


@dataclass
class MetricsRecord:
    mean_target_occurrences: float  # #L
    introduced_fraction: float  # #|L|>=1
    length: int  # words (EN/PL) or characters (ZH)
    oov_fraction: float
    length_per_occurrence: float | None  # None when no target occurs at all
    judge_scores: dict[str, int] = field(default_factory=dict)


def count_metrics(
    report: VerificationReport, tokenized: TokenizedStory, plan: SessionPlan
) -> MetricsRecord:
    """Derive the count-based metrics for one story."""
    missing = set(plan.new_words) - set(report.target_counts)
    if missing:
        raise PlanMismatch(f"report lacks counts for planned words: {sorted(missing)}")
    new = plan.new_words
    counts = [report.target_counts[w] for w in new]
    total_occurrences = sum(counts)
    n = len(new)
    length = tokenized.total_tokens
    return MetricsRecord(
        mean_target_occurrences=total_occurrences / n if n else 0.0,
        introduced_fraction=sum(1 for c in counts if c >= 1) / n if n else 0.0,
        length=length,
        oov_fraction=report.oov_fraction,
        length_per_occurrence=length / total_occurrences if total_occurrences else None,
    )


_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")


def parse_grade(reply: str) -> int:
    """The last standalone integer in 1..5 anywhere in the reply.

    Decimals like 4.5 and larger numbers like 15 are not grades.
    """
    grade = None
    for m in _NUMBER_RE.finditer(reply):
        if m.group(0) in ("1", "2", "3", "4", "5"):
            grade = int(m.group(0))
    if grade is None:
        raise UnparseableGrade(f"no integer 1-5 found in reply: {reply[:80]!r}")
    return grade


def judge_story(story: str, aspect: str, gateway: Gateway) -> tuple[int, str]:
    """Score one aspect 1-5; returns (grade, raw reply) for auditability."""
    if aspect not in JUDGE_ASPECTS:
        raise ValueError(f"unknown aspect {aspect!r}")
    prompt = render_prompt(load_template(f"judge_{aspect}"), {"STORY": story})
    reply = gateway.complete(user_request(prompt))
    return parse_grade(reply), reply


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    n_a: int
    n_b: int


def _mean(xs) -> float:
    return sum(xs) / len(xs)


def t_test_unpaired(sample_a, sample_b, welch: bool = False) -> TTestResult:
    """Two-sample unpaired t-test, Student pooled-variance by default."""
    a, b = list(sample_a), list(sample_b)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise DegenerateSample("each sample needs at least 2 values")
    ma, mb = _mean(a), _mean(b)
    ssa = sum((x - ma) ** 2 for x in a)
    ssb = sum((x - mb) ** 2 for x in b)
    if welch:
        va, vb = ssa / (na - 1), ssb / (nb - 1)
        se2 = va / na + vb / nb
        if se2 == 0:
            raise DegenerateSample("both samples are constant")
        df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
        t = (ma - mb) / math.sqrt(se2)
    else:
        pooled = (ssa + ssb) / (na + nb - 2)
        if pooled == 0:
            raise DegenerateSample("pooled variance is zero")
        df = na + nb - 2
        t = (ma - mb) / math.sqrt(pooled * (1 / na + 1 / nb))
    p = 2 * float(t_dist.sf(abs(t), df))
    return TTestResult(t_statistic=t, degrees_of_freedom=df, p_value=min(p, 1.0), n_a=na, n_b=nb)


def pearson(x, y) -> float:
    x, y = list(x), list(y)
    if len(x) != len(y) or len(x) < 2:
        raise DegenerateSample("samples must have equal length >= 2")
    mx, my = _mean(x), _mean(y)
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        raise DegenerateSample("zero variance")
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    return sxy / math.sqrt(sxx * syy)


def _average_ranks(xs) -> list[float]:
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation on average-ranked data (ties share ranks)."""
    x, y = list(x), list(y)
    if len(x) != len(y) or len(x) < 2:
        raise DegenerateSample("samples must have equal length >= 2")
    return pearson(_average_ranks(x), _average_ranks(y))


@dataclass
class AggregateRow:
    mean_target_occurrences: float
    introduced_fraction: float
    mean_length: float
    oov_fraction: float
    length_per_occurrence: float | None
    judge_means: dict[str, float]
    n_records: int
    n_without_occurrences: int  # records excluded from length_per_occurrence
    judge_missing: dict[str, int]  # per-aspect count of records without a score


def aggregate(records: list[MetricsRecord]) -> AggregateRow:
    """Arithmetic mean per column, skipping records without a defined value."""
    if not records:
        raise EmptyBatch("no records to aggregate")
    ratios = [r.length_per_occurrence for r in records if r.length_per_occurrence is not None]
    judge_means: dict[str, float] = {}
    judge_missing: dict[str, int] = {}
    for aspect in JUDGE_ASPECTS:
        scores = [r.judge_scores[aspect] for r in records if aspect in r.judge_scores]
        judge_missing[aspect] = len(records) - len(scores)
        if scores:
            judge_means[aspect] = _mean(scores)
    return AggregateRow(
        mean_target_occurrences=_mean([r.mean_target_occurrences for r in records]),
        introduced_fraction=_mean([r.introduced_fraction for r in records]),
        mean_length=_mean([r.length for r in records]),
        oov_fraction=_mean([r.oov_fraction for r in records]),
        length_per_occurrence=_mean(ratios) if ratios else None,
        judge_means=judge_means,
        n_records=len(records),
        n_without_occurrences=len(records) - len(ratios),
        judge_missing=judge_missing,
    )


TABLE_COLUMNS = ("Gram.", "Coh.", "Int.", "#L", "Len.", "OOV", "#|L|>=1")


def _row_cells(row: AggregateRow) -> list[str]:
    def judge(aspect: str) -> str:
        return f"{row.judge_means[aspect]:.2f}" if aspect in row.judge_means else "-"

    return [
        judge("gram"),
        judge("coh"),
        judge("int"),
        f"{row.mean_target_occurrences:.2f}",
        f"{row.mean_length:.2f}",
        f"{row.oov_fraction * 100:.2f}%",
        f"{row.introduced_fraction * 100:.2f}%",
    ]


def emit_table_tsv(rows: list[tuple[str, AggregateRow]]) -> str:
    lines = ["Method\t" + "\t".join(TABLE_COLUMNS)]
    for name, row in rows:
        lines.append(name + "\t" + "\t".join(_row_cells(row)))
    return "\n".join(lines) + "\n"


def emit_table_text(rows: list[tuple[str, AggregateRow]]) -> str:
    header = ["Method", *TABLE_COLUMNS]
    body = [[name, *_row_cells(row)] for name, row in rows]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join(fmt.format(*r).rstrip() for r in [header, *body]) + "\n"
