"""Spaced-repetition engine: per-word memory state and session planning.

Scheduling follows the classic SM-2 update: quality grades 0-5, ease
factor floored at 1.3, intervals of 1 day then 6 days then
previous * ease.  Intervals are kept as real day counts, not rounded.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

from .errors import NoNextLevel, QualityOutOfRange
from .lexicon import LevelTag, Lexicon, allowed_set

MIN_EASE = 1.3
FIRST_INTERVAL_DAYS = 1.0
SECOND_INTERVAL_DAYS = 6.0

DEFAULT_REQUIRED_OCCURRENCES = 3

# UI grade vocabulary -> SM-2 quality
GRADE_QUALITY = {"again": 2, "hard": 3, "good": 4, "easy": 5}


@dataclass(frozen=True)
class Card:
    word: str
    language: str
    ease_factor: float = 2.5
    interval_days: float = FIRST_INTERVAL_DAYS
    repetitions: int = 0
    due_at: datetime = datetime.min
    history: tuple[tuple[datetime, int], ...] = ()

    @property
    def is_new(self) -> bool:
        return not self.history


def grade_review(card: Card, quality: int, now: datetime) -> Card:
    """Apply one SM-2 review outcome and reschedule the card."""
    if not isinstance(quality, int) or not 0 <= quality <= 5:
        raise QualityOutOfRange(f"quality must be an integer 0-5, got {quality!r}")
    if quality >= 3:
        repetitions = card.repetitions + 1
        if repetitions == 1:
            interval = FIRST_INTERVAL_DAYS
        elif repetitions == 2:
            interval = SECOND_INTERVAL_DAYS
        else:
            interval = card.interval_days * card.ease_factor
        ease = max(
            MIN_EASE,
            card.ease_factor + (0.1 - (5 - quality) * (0.08 + (5 - quality) * 0.02)),
        )
    else:
        repetitions = 0
        interval = FIRST_INTERVAL_DAYS
        ease = card.ease_factor
    return replace(
        card,
        ease_factor=ease,
        interval_days=interval,
        repetitions=repetitions,
        due_at=now + timedelta(days=interval),
        history=card.history + ((now, quality),),
    )


@dataclass
class Deck:
    language: str
    learner_level: LevelTag
    cards: dict[str, Card] = field(default_factory=dict)

    def card_for(self, word: str) -> Card | None:
        return self.cards.get(word)

    def upsert(self, card: Card) -> None:
        self.cards[card.word] = card


def due_cards(deck: Deck, now: datetime, limit: int) -> list[Card]:
    """Cards due at or before ``now``, earliest first, ties broken by word."""
    due = [c for c in deck.cards.values() if c.due_at <= now and c.history]
    due.sort(key=lambda c: (c.due_at, c.word))
    return due[: max(limit, 0)]


class SessionMode:
    NEW_ONLY = "new_only"
    MIXED = "mixed"


@dataclass(frozen=True)
class SessionPlan:
    new_words: tuple[str, ...]  # require c occurrences each
    review_words: tuple[str, ...]  # require >= 1 occurrence each
    c: int = DEFAULT_REQUIRED_OCCURRENCES
    mode: str = SessionMode.NEW_ONLY
    shortfall: bool = False

    def __post_init__(self):
        overlap = set(self.new_words) & set(self.review_words)
        if overlap:
            raise ValueError(f"words in both new and review sets: {sorted(overlap)}")

    @property
    def all_targets(self) -> tuple[str, ...]:
        return self.new_words + self.review_words

    def required_count(self, word: str) -> int:
        return self.c if word in self.new_words else 1


def unlearned_next_level_words(deck: Deck, lexicon: Lexicon) -> list[str]:
    """Next-level words with no card or an untouched card, sorted."""
    nxt = deck.learner_level.successor()
    if nxt is None:
        raise NoNextLevel(f"{deck.learner_level} is the top level of {lexicon.scheme.value}")
    candidates = lexicon.words_at(nxt)
    return sorted(w for w in candidates if w not in deck.cards or deck.cards[w].is_new)


def plan_session(
    deck: Deck,
    lexicon: Lexicon,
    mode: str,
    n_new: int,
    n_review: int,
    rng_seed: int,
    now: datetime | None = None,
) -> SessionPlan:
    """Pick seeded-random new words from the next level plus due reviews."""
    now = now or datetime.now()
    candidates = unlearned_next_level_words(deck, lexicon)
    rng = random.Random(rng_seed)
    k = min(n_new, len(candidates))
    new_words = tuple(sorted(rng.sample(candidates, k))) if k else ()
    review_words: tuple[str, ...] = ()
    if mode == SessionMode.MIXED and n_review > 0:
        due = due_cards(deck, now, n_review)
        review_words = tuple(c.word for c in due if c.word not in new_words)
    shortfall = len(new_words) < n_new or (
        mode == SessionMode.MIXED and len(review_words) < n_review
    )
    return SessionPlan(
        new_words=new_words,
        review_words=review_words,
        mode=mode,
        shortfall=shortfall,
    )
