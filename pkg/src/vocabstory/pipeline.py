"""Story generation strategies and the verify-and-rewrite loop.

Templates live as one text file per (strategy, stage) under
``templates/``; rendering is a byte-exact placeholder substitution.
Multi-stage strategies thread prior exchanges as conversation history so
later prompts like "the idea you have picked" refer to real turns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import EmptyReply, MissingBinding
from .gateway import ChatMessage, ChatRequest, Gateway
from .lexicon import Language, LemmaTable
from .srs import SessionPlan
from .textcheck import Marker, VerificationReport, mark_violations, verify_story

MAX_REWRITE_ITERATIONS = 5

PLACEHOLDERS = ("WORDS TO LEARN", "UNKNOWN WORDS", "HIGHLIGHTED STORY", "STORY")
_PLACEHOLDER_RE = re.compile("|".join(re.escape(f"[{p}]") for p in PLACEHOLDERS))


class Strategy:
    SIMPLE = "simple"
    PLANNING = "planning"
    EXAMPLES_FIRST = "examples_first"


class RewriteStrategy:
    NONE = "none"
    REWRITE = "rewrite"
    REWRITE_HIGHLIGHTED = "rewrite_highlighted"
    SYNONYMS_THEN_REWRITE = "synonyms_then_rewrite"


_STAGE_COUNT = {
    Strategy.SIMPLE: 1,
    Strategy.PLANNING: 4,
    Strategy.EXAMPLES_FIRST: 2,
}


def load_template(name: str) -> str:
    """Read one template file from the packaged template directory."""
    return resources.files("vocabstory.templates").joinpath(f"{name}.txt").read_text("utf-8")


def render_prompt(template: str, bindings: dict[str, str]) -> str:
    """Substitute every placeholder; refuse to leave any unfilled."""

    def repl(m: re.Match) -> str:
        key = m.group(0)[1:-1]
        if key not in bindings:
            raise MissingBinding(f"no binding for placeholder [{key}]")
        return bindings[key]

    return _PLACEHOLDER_RE.sub(repl, template)


def join_words(words) -> str:
    return ", ".join(words)


def generate_story(
    strategy: str,
    plan: SessionPlan,
    gateway: Gateway,
) -> tuple[str, list[ChatMessage]]:
    """Run one generation strategy; returns the story and the full dialogue."""
    if not plan.new_words:
        raise ValueError("session plan has no new words")
    bindings = {"WORDS TO LEARN": join_words(plan.all_targets)}
    history: list[ChatMessage] = []
    reply = ""
    for stage in range(1, _STAGE_COUNT[strategy] + 1):
        prompt = render_prompt(load_template(f"{strategy}_{stage}"), bindings)
        history.append(ChatMessage("user", prompt))
        reply = gateway.complete(ChatRequest(messages=tuple(history)))
        history.append(ChatMessage("assistant", reply))
    if not reply.strip():
        raise EmptyReply(f"{strategy} returned a blank story")
    return reply, history


@dataclass(frozen=True)
class IterationRecord:
    prompt_fingerprint: str
    story: str
    violation_count: int
    target_counts: dict[str, int]


@dataclass
class GenerationTrace:
    strategy: str
    rewrite_strategy: str
    final_story: str
    initial_violation_count: int
    initial_target_counts: dict[str, int]
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def iterations_used(self) -> int:
        return len(self.records)


def _rewrite_round(
    story: str,
    report: VerificationReport,
    tokenized,
    targets_text: str,
    rewrite_strategy: str,
    gateway: Gateway,
    history: list[ChatMessage],
) -> tuple[str, str]:
    """One rewrite round; returns (new story, fingerprint of the last prompt)."""
    if rewrite_strategy == RewriteStrategy.REWRITE:
        prompt = render_prompt(
            load_template("rewrite_1"),
            {
                "UNKNOWN WORDS": join_words(sorted(report.violations)),
                "WORDS TO LEARN": targets_text,
            },
        )
        history.append(ChatMessage("user", prompt))
        request = ChatRequest(messages=tuple(history))
        reply = gateway.complete(request)
        history.append(ChatMessage("assistant", reply))
        return reply, request.fingerprint()

    if rewrite_strategy == RewriteStrategy.REWRITE_HIGHLIGHTED:
        marked = mark_violations(tokenized, report, Marker.ASTERISK)
        prompt = render_prompt(
            load_template("rewrite_highlighted_1"),
            {"HIGHLIGHTED STORY": marked, "WORDS TO LEARN": targets_text},
        )
        request = ChatRequest(messages=(ChatMessage("user", prompt),))
        reply = gateway.complete(request)
        return reply, request.fingerprint()

    if rewrite_strategy == RewriteStrategy.SYNONYMS_THEN_REWRITE:
        marked = mark_violations(tokenized, report, Marker.BRACKET)
        prompt1 = render_prompt(load_template("synonyms_1"), {"HIGHLIGHTED STORY": marked})
        messages = [ChatMessage("user", prompt1)]
        synonyms = gateway.complete(ChatRequest(messages=tuple(messages)))
        messages.append(ChatMessage("assistant", synonyms))
        prompt2 = render_prompt(load_template("synonyms_2"), {})
        messages.append(ChatMessage("user", prompt2))
        request = ChatRequest(messages=tuple(messages))
        reply = gateway.complete(request)
        return reply, request.fingerprint()

    raise ValueError(f"unknown rewrite strategy {rewrite_strategy!r}")


def enforce_constraints(
    story: str,
    allowed: frozenset[str] | set[str],
    targets,
    rewrite_strategy: str,
    gateway: Gateway,
    language: Language,
    lemma_table: LemmaTable,
    max_iters: int = MAX_REWRITE_ITERATIONS,
    history: list[ChatMessage] | None = None,
    strategy: str = Strategy.SIMPLE,
) -> GenerationTrace:
    """Loop verify -> rewrite until clean or ``max_iters`` rounds are spent.

    ``history`` is the dialogue from generation, used by the base rewrite
    strategy so "this story" refers to the model's own last reply.  When
    absent, the story is injected as a synthetic assistant turn.
    """
    targets = tuple(targets)
    target_set = frozenset(targets)
    targets_text = join_words(targets)
    tokenized, report = verify_story(story, frozenset(allowed), target_set, language, lemma_table)
    trace = GenerationTrace(
        strategy=strategy,
        rewrite_strategy=rewrite_strategy,
        final_story=story,
        initial_violation_count=report.violation_token_count,
        initial_target_counts=dict(report.target_counts),
    )
    if rewrite_strategy == RewriteStrategy.NONE:
        return trace
    if history is None:
        history = [ChatMessage("assistant", story)]
    else:
        history = list(history)

    while report.violations and trace.iterations_used < max_iters:
        story, fingerprint = _rewrite_round(
            story, report, tokenized, targets_text, rewrite_strategy, gateway, history
        )
        tokenized, report = verify_story(
            story, frozenset(allowed), target_set, language, lemma_table
        )
        trace.records.append(
            IterationRecord(
                prompt_fingerprint=fingerprint,
                story=story,
                violation_count=report.violation_token_count,
                target_counts=dict(report.target_counts),
            )
        )
    trace.final_story = story
    return trace
