"""Leveled vocabulary lists and lemma lookup tables.

A lexicon maps every word to a single proficiency level (CEFR, HSK, or a
frequency-derived scheme).  Lemma tables map surface forms to their base
forms and drive the verifier's inflection handling.  Both structures are
immutable after load and safe for concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DuplicateEntry, EmptyLexicon, MalformedLine, SchemeMismatch


class Language(str, Enum):
    EN = "en"
    PL = "pl"
    ZH = "zh"


class Scheme(str, Enum):
    CEFR = "CEFR"
    HSK = "HSK"
    FREQ = "FREQ"


_SCHEME_RANKS = {
    Scheme.CEFR: ["A1", "A2", "B1", "B2", "C1", "C2"],
    Scheme.HSK: ["1", "2", "3", "4", "5", "6", "7"],
    Scheme.FREQ: ["1", "2", "3", "4", "5", "6"],
}


@dataclass(frozen=True, order=False)
class LevelTag:
    """An ordinal proficiency level within one scheme."""

    scheme: Scheme
    rank: str

    def __post_init__(self):
        if self.rank not in _SCHEME_RANKS[self.scheme]:
            raise ValueError(f"unknown rank {self.rank!r} for scheme {self.scheme.value}")

    @property
    def index(self) -> int:
        return _SCHEME_RANKS[self.scheme].index(self.rank)

    def _check(self, other: "LevelTag"):
        if not isinstance(other, LevelTag):
            return NotImplemented
        if other.scheme is not self.scheme:
            raise SchemeMismatch(f"cannot compare {self.scheme.value} with {other.scheme.value}")
        return other

    def __le__(self, other):
        return self.index <= self._check(other).index

    def __lt__(self, other):
        return self.index < self._check(other).index

    def __ge__(self, other):
        return self.index >= self._check(other).index

    def __gt__(self, other):
        return self.index > self._check(other).index

    def successor(self) -> "LevelTag | None":
        ranks = _SCHEME_RANKS[self.scheme]
        i = self.index
        return LevelTag(self.scheme, ranks[i + 1]) if i + 1 < len(ranks) else None

    @classmethod
    def parse(cls, scheme: Scheme, text: str) -> "LevelTag":
        return cls(scheme, text.strip())

    def __str__(self):
        return self.rank


@dataclass(frozen=True)
class Lexicon:
    """Words tagged with proficiency levels, plus the ZH character set."""

    language: Language
    scheme: Scheme
    entries: dict[str, LevelTag]
    character_set: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.language is Language.ZH:
            chars = frozenset(c for w in self.entries for c in w)
            object.__setattr__(self, "character_set", chars)

    def __len__(self):
        return len(self.entries)

    def level_of(self, word: str) -> LevelTag | None:
        return self.entries.get(word)

    def words_at(self, level: LevelTag) -> frozenset[str]:
        return frozenset(w for w, lv in self.entries.items() if lv == level)


def load_lexicon(source: str | Path, language: Language, scheme: Scheme) -> Lexicon:
    """Load a lexicon from a UTF-8 TSV file of ``word<TAB>level`` lines.

    Blank lines are ignored.  Raises DuplicateEntry when a word repeats,
    MalformedLine on lines without a tab, EmptyLexicon when nothing loads.
    """
    entries: dict[str, LevelTag] = {}
    text = Path(source).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise MalformedLine(f"{source}:{lineno}: expected word<TAB>level, got {line!r}")
        word, _, level_text = line.partition("\t")
        word = word.strip()
        if not word or not level_text.strip():
            raise MalformedLine(f"{source}:{lineno}: empty field in {line!r}")
        level = LevelTag.parse(scheme, level_text)
        if word in entries:
            raise DuplicateEntry(f"{source}:{lineno}: {word!r} already loaded")
        entries[word] = level
    if not entries:
        raise EmptyLexicon(f"{source}: no valid lines")
    return Lexicon(language=language, scheme=scheme, entries=entries)


def save_lexicon(lexicon: Lexicon, dest: str | Path) -> None:
    """Write the lexicon back out in the TSV load format (round-trippable)."""
    lines = [f"{w}\t{lv.rank}" for w, lv in lexicon.entries.items()]
    Path(dest).write_text("\n".join(lines) + "\n", encoding="utf-8")


# Rank thresholds for frequency-derived CEFR levels: the most frequent
# 1,500 words are A1, then cumulative cutoffs at 3,500 / 5,000 / 7,500 /
# 10,000, and everything beyond is C2.
_FREQ_CUTOFFS = [(1500, "A1"), (3500, "A2"), (5000, "B1"), (7500, "B2"), (10000, "C1")]


def build_frequency_levels(ranked_words: list[str], language: Language) -> Lexicon:
    """Assign CEFR levels to a frequency-ranked word list (most frequent first)."""
    entries: dict[str, LevelTag] = {}
    for i, word in enumerate(ranked_words, start=1):
        if word in entries:
            raise DuplicateEntry(f"rank {i}: {word!r} appears twice")
        rank = "C2"
        for cutoff, name in _FREQ_CUTOFFS:
            if i <= cutoff:
                rank = name
                break
        entries[word] = LevelTag(Scheme.CEFR, rank)
    return Lexicon(language=language, scheme=Scheme.CEFR, entries=entries)


def allowed_set(lexicon: Lexicon, learner_level: LevelTag) -> frozenset[str]:
    """All words at or below the learner's level."""
    if learner_level.scheme is not lexicon.scheme:
        raise SchemeMismatch(
            f"lexicon uses {lexicon.scheme.value}, level is {learner_level.scheme.value}"
        )
    return frozenset(w for w, lv in lexicon.entries.items() if lv <= learner_level)


@dataclass(frozen=True)
class LemmaTable:
    """Surface form -> set of lemmas, file-driven."""

    language: Language
    table: dict[str, frozenset[str]]

    def lookup(self, surface: str) -> frozenset[str]:
        return self.table.get(surface, frozenset())

    def __len__(self):
        return len(self.table)


def load_lemma_table(source: str | Path, language: Language) -> LemmaTable:
    """Load a lemma table from ``surface<TAB>lemma`` lines (repeats allowed)."""
    table: dict[str, set[str]] = {}
    text = Path(source).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise MalformedLine(f"{source}:{lineno}: expected surface<TAB>lemma, got {line!r}")
        surface, _, lemma = line.partition("\t")
        surface, lemma = surface.strip(), lemma.strip()
        if not surface or not lemma:
            raise MalformedLine(f"{source}:{lineno}: empty field in {line!r}")
        table.setdefault(surface, set()).add(lemma)
    return LemmaTable(language=language, table={s: frozenset(v) for s, v in table.items()})


def empty_lemma_table(language: Language) -> LemmaTable:
    return LemmaTable(language=language, table={})


@dataclass(frozen=True)
class LanguageResources:
    lexicon: Lexicon
    lemma_table: LemmaTable


def load_manifest(path: str | Path) -> dict[Language, LanguageResources]:
    """Load a manifest JSON mapping language -> {scheme, lexicon, lemmas} paths.

    Paths are resolved relative to the manifest file.
    """
    path = Path(path)
    spec = json.loads(path.read_text(encoding="utf-8"))
    out: dict[Language, LanguageResources] = {}
    for lang_key, item in spec.items():
        lang = Language(lang_key)
        scheme = Scheme(item["scheme"])
        lex = load_lexicon(path.parent / item["lexicon"], lang, scheme)
        if item.get("lemmas"):
            lemmas = load_lemma_table(path.parent / item["lemmas"], lang)
        else:
            lemmas = empty_lemma_table(lang)
        out[lang] = LanguageResources(lexicon=lex, lemma_table=lemmas)
    return out
