"""Deterministic lexical verifier.

Normalizes and tokenizes a story, classifies every token against the
allowed vocabulary (known words plus the session's target words), and
reports violations and per-target occurrence counts.  English and Polish
are whitespace-tokenized with table-driven lemma lookup; Chinese is
checked per character, with multi-character targets counted by
non-overlapping substring matching.

All functions here are pure.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum

from .errors import SpanMismatch
from .lexicon import Language, LemmaTable


def _is_separator(ch: str) -> bool:
    # Punctuation (all Unicode P* categories, so hyphens split words) and
    # whitespace both end a token.
    return ch.isspace() or unicodedata.category(ch).startswith("P")


def normalize(text: str, language: Language | None = None) -> str:
    """Lowercase, strip punctuation, collapse whitespace runs."""
    cleaned = "".join(" " if _is_separator(ch) else ch.lower() for ch in text)
    return " ".join(cleaned.split())


def tokenize(normalized_text: str, language: Language) -> list[str]:
    """Split normalized text into tokens: whitespace units, or single
    characters for Chinese (whitespace dropped)."""
    if language is Language.ZH:
        return [ch for ch in normalized_text if not ch.isspace()]
    return normalized_text.split()


@dataclass(frozen=True)
class TokenizedStory:
    language: Language
    raw_text: str
    tokens: tuple[str, ...]
    token_spans: tuple[tuple[int, int], ...]  # character offsets into raw_text

    @property
    def total_tokens(self) -> int:
        return len(self.tokens)


def tokenize_with_spans(raw_text: str, language: Language) -> TokenizedStory:
    """Tokenize raw text directly, keeping the source span of each token.

    Produces the same token sequence as ``tokenize(normalize(text))`` while
    preserving offsets for violation markup and UI highlighting.
    """
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    if language is Language.ZH:
        for i, ch in enumerate(raw_text):
            if not _is_separator(ch):
                tokens.append(ch.lower())
                spans.append((i, i + 1))
    else:
        start = None
        for i, ch in enumerate(raw_text):
            if _is_separator(ch):
                if start is not None:
                    tokens.append(raw_text[start:i].lower())
                    spans.append((start, i))
                    start = None
            elif start is None:
                start = i
        if start is not None:
            tokens.append(raw_text[start:].lower())
            spans.append((start, len(raw_text)))
    return TokenizedStory(language, raw_text, tuple(tokens), tuple(spans))


def lemma_candidates(token: str, lemma_table: LemmaTable) -> frozenset[str]:
    """The token itself plus every lemma the table lists for it."""
    return frozenset({token}) | lemma_table.lookup(token)


@dataclass(frozen=True)
class VerificationReport:
    violations: frozenset[str]  # out-of-vocabulary surface forms
    violation_token_count: int
    total_tokens: int
    target_counts: dict[str, int]

    @property
    def oov_fraction(self) -> float:
        if self.total_tokens == 0:
            return 0.0
        return self.violation_token_count / self.total_tokens

    @property
    def clean(self) -> bool:
        return not self.violations


def _count_non_overlapping(haystack: str, needle: str) -> int:
    return haystack.count(needle) if needle else 0


def verify_story(
    story_text: str,
    allowed: frozenset[str] | set[str],
    targets: frozenset[str] | set[str],
    language: Language,
    lemma_table: LemmaTable,
) -> tuple[TokenizedStory, VerificationReport]:
    """Classify every token as allowed or violating and count target uses.

    ``allowed`` is the full permitted vocabulary (known words plus targets,
    normalized); ``targets`` are the session's words, a subset of allowed.
    """
    tokenized = tokenize_with_spans(story_text, language)
    target_counts = {t: 0 for t in targets}
    violations: set[str] = set()
    violation_token_count = 0

    if language is Language.ZH:
        allowed_chars = {ch for word in allowed for ch in word}
        for tok in tokenized.tokens:
            if tok not in allowed_chars and not tok.isdigit():
                violations.add(tok)
                violation_token_count += 1
        norm = normalize(story_text, language)
        for t in targets:
            target_counts[t] = _count_non_overlapping(norm, t)
    else:
        for tok in tokenized.tokens:
            cands = lemma_candidates(tok, lemma_table)
            if not (cands & allowed) and not tok.isdigit():
                violations.add(tok)
                violation_token_count += 1
            for t in targets:
                if t in cands:
                    target_counts[t] += 1

    report = VerificationReport(
        violations=frozenset(violations),
        violation_token_count=violation_token_count,
        total_tokens=tokenized.total_tokens,
        target_counts=target_counts,
    )
    return tokenized, report


class Marker(str, Enum):
    ASTERISK = "asterisk"
    BRACKET = "bracket"


_MARKS = {Marker.ASTERISK: ("*", "*"), Marker.BRACKET: ("(", ")")}


def mark_violations(tokenized: TokenizedStory, report: VerificationReport, marker: Marker) -> str:
    """Wrap every violating token occurrence in the original text.

    Non-violating characters are passed through byte-identical, so stripping
    the markers recovers the input exactly.
    """
    left, right = _MARKS[marker]
    out: list[str] = []
    pos = 0
    raw = tokenized.raw_text
    for tok, (start, end) in zip(tokenized.tokens, tokenized.token_spans):
        if raw[start:end].lower() != tok:
            raise SpanMismatch(f"span {start}:{end} does not match token {tok!r}")
        if tok in report.violations:
            out.append(raw[pos:start])
            out.append(left + raw[start:end] + right)
            pos = end
    out.append(raw[pos:])
    return "".join(out)
