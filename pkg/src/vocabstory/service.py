"""HTTP session service: decks, live story sessions, grading, stats.

State is event-sourced: every mutation appends a DeckEvent and is applied
through the same reducer that replay uses, so replaying a deck's log
always reconstructs the live state.  Persistence is an append-only
JSON-lines file per deck (optional; in-memory otherwise).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import InvalidGrade, NoNextLevel, UnknownLexicon, UnknownWord, VocabStoryError
from .evalkit import count_metrics
from .gateway import Gateway
from .harness import derive_seed
from .lexicon import Language, LanguageResources, LevelTag, Scheme, allowed_set
from .pipeline import RewriteStrategy, Strategy, enforce_constraints, generate_story
from .srs import (
    GRADE_QUALITY,
    Card,
    Deck,
    SessionMode,
    SessionPlan,
    grade_review,
    plan_session,
    unlearned_next_level_words,
)
from .textcheck import lemma_candidates, verify_story


@dataclass(frozen=True)
class DeckEvent:
    event_id: int
    kind: str
    payload: dict
    timestamp: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "event_id": self.event_id,
                "kind": self.kind,
                "payload": self.payload,
                "timestamp": self.timestamp,
            },
            ensure_ascii=False,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "DeckEvent":
        d = json.loads(line)
        return cls(d["event_id"], d["kind"], d["payload"], d["timestamp"])


DECK_CREATED = "DECK_CREATED"
SESSION_STARTED = "SESSION_STARTED"
STORY_STORED = "STORY_STORED"
REVIEW_GRADED = "REVIEW_GRADED"


@dataclass
class DeckState:
    deck_id: str
    deck: Deck | None = None
    lexicon_ref: str = ""
    events: list[DeckEvent] = field(default_factory=list)
    sessions: dict[str, dict] = field(default_factory=dict)
    session_order: list[str] = field(default_factory=list)

    def next_event_id(self) -> int:
        return self.events[-1].event_id + 1 if self.events else 1


def apply_event(state: DeckState, event: DeckEvent) -> None:
    """The single reducer used for both live mutation and replay."""
    p = event.payload
    if event.kind == DECK_CREATED:
        state.deck = Deck(
            language=p["language"],
            learner_level=LevelTag(Scheme(p["scheme"]), p["learner_level"]),
        )
        state.lexicon_ref = p["lexicon_ref"]
    elif event.kind == SESSION_STARTED:
        state.sessions[p["session_id"]] = {"plan": p, "story": None}
        state.session_order.append(p["session_id"])
    elif event.kind == STORY_STORED:
        state.sessions[p["session_id"]]["story"] = p
    elif event.kind == REVIEW_GRADED:
        assert state.deck is not None
        word = p["word"]
        card = state.deck.card_for(word) or Card(word=word, language=state.deck.language)
        when = datetime.fromisoformat(p["timestamp"])
        state.deck.upsert(grade_review(card, p["quality"], when))
    else:
        raise ValueError(f"unknown event kind {event.kind}")
    state.events.append(event)


def replay(deck_id: str, events: list[DeckEvent]) -> DeckState:
    state = DeckState(deck_id=deck_id)
    for ev in events:
        apply_event(state, ev)
    return state


def snapshot(state: DeckState) -> dict:
    """A comparable view of everything the service derives from a deck."""
    assert state.deck is not None
    return {
        "deck_id": state.deck_id,
        "lexicon_ref": state.lexicon_ref,
        "learner_level": state.deck.learner_level.rank,
        "cards": {
            w: {
                "ease": c.ease_factor,
                "interval": c.interval_days,
                "reps": c.repetitions,
                "due": c.due_at.isoformat(),
                "history": [(t.isoformat(), q) for t, q in c.history],
            }
            for w, c in sorted(state.deck.cards.items())
        },
        "sessions": state.sessions,
        "session_order": state.session_order,
        "last_event_id": state.events[-1].event_id if state.events else 0,
    }


@dataclass
class ServiceConfig:
    resources: dict[str, LanguageResources]  # lexicon_ref -> resources
    gateway: Gateway
    strategy: str = Strategy.SIMPLE
    rewrite_strategy: str = RewriteStrategy.REWRITE
    data_dir: str | Path | None = None
    clock: Callable[[], datetime] = datetime.utcnow


def _target_spans(tokenized, targets, lemma_table, language: Language) -> dict[str, list]:
    """Character spans of each target's occurrences in the raw story."""
    spans: dict[str, list] = {t: [] for t in targets}
    if language is Language.ZH:
        raw = tokenized.raw_text.lower()
        for t in targets:
            start = 0
            while True:
                i = raw.find(t, start)
                if i < 0:
                    break
                spans[t].append([i, i + len(t)])
                start = i + len(t)
    else:
        for tok, (s, e) in zip(tokenized.tokens, tokenized.token_spans):
            cands = lemma_candidates(tok, lemma_table)
            for t in targets:
                if t in cands:
                    spans[t].append([s, e])
    return spans


class SessionService:
    """Framework-free core; the FastAPI app is a thin shell over this."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.decks: dict[str, DeckState] = {}
        self._deck_counter = 0
        if config.data_dir:
            self._load_from_disk(Path(config.data_dir))

    # -- persistence -------------------------------------------------

    def _load_from_disk(self, data_dir: Path) -> None:
        data_dir.mkdir(parents=True, exist_ok=True)
        for log in sorted(data_dir.glob("deck-*.jsonl")):
            deck_id = log.stem
            lines = [l for l in log.read_text(encoding="utf-8").splitlines() if l.strip()]
            events = []
            for i, line in enumerate(lines):
                try:
                    events.append(DeckEvent.from_json(line))
                except json.JSONDecodeError:
                    # a crash mid-append may leave a half-written final line;
                    # that write was never acknowledged, so drop it
                    if i == len(lines) - 1:
                        break
                    raise
            self.decks[deck_id] = replay(deck_id, events)
            n = int(deck_id.split("-")[1])
            self._deck_counter = max(self._deck_counter, n)

    def _append(self, state: DeckState, kind: str, payload: dict) -> None:
        event = DeckEvent(
            event_id=state.next_event_id(),
            kind=kind,
            payload=payload,
            timestamp=self.config.clock().isoformat(),
        )
        apply_event(state, event)
        if self.config.data_dir:
            path = Path(self.config.data_dir) / f"{state.deck_id}.jsonl"
            with open(path, "a", encoding="utf-8") as f:
                f.write(event.to_json() + "\n")

    # -- operations --------------------------------------------------

    def _state(self, deck_id: str) -> DeckState:
        if deck_id not in self.decks:
            raise KeyError(deck_id)
        return self.decks[deck_id]

    def _resources(self, ref: str) -> LanguageResources:
        if ref not in self.config.resources:
            raise UnknownLexicon(f"no lexicon registered under {ref!r}")
        return self.config.resources[ref]

    def create_deck(self, language: str, learner_level: str, lexicon_ref: str) -> str:
        res = self._resources(lexicon_ref)
        level = LevelTag.parse(res.lexicon.scheme, learner_level)
        self._deck_counter += 1
        deck_id = f"deck-{self._deck_counter}"
        state = DeckState(deck_id=deck_id)
        self.decks[deck_id] = state
        self._append(
            state,
            DECK_CREATED,
            {
                "deck_id": deck_id,
                "language": language,
                "learner_level": level.rank,
                "scheme": res.lexicon.scheme.value,
                "lexicon_ref": lexicon_ref,
            },
        )
        return deck_id

    def start_session(self, deck_id: str, mode: str = SessionMode.NEW_ONLY,
                      n_new: int = 10, n_review: int = 0,
                      seed: int | None = None) -> dict:
        state = self._state(deck_id)
        assert state.deck is not None
        res = self._resources(state.lexicon_ref)
        now = self.config.clock()
        if mode == SessionMode.MIXED and n_review == 0:
            n_new, n_review = 3, 7
        if seed is None:
            seed = derive_seed(hash(deck_id) & 0xFFFFFFFF, len(state.session_order))
        plan = plan_session(state.deck, res.lexicon, mode, n_new, n_review, seed, now=now)
        language = Language(state.deck.language)
        known = allowed_set(res.lexicon, state.deck.learner_level)
        allowed = known | set(plan.all_targets)

        story, history = generate_story(self.config.strategy, plan, self.config.gateway)
        trace = enforce_constraints(
            story, allowed, plan.all_targets, self.config.rewrite_strategy,
            self.config.gateway, language, res.lemma_table,
            history=history, strategy=self.config.strategy,
        )
        tokenized, report = verify_story(
            trace.final_story, frozenset(allowed), frozenset(plan.all_targets),
            language, res.lemma_table,
        )
        metrics = count_metrics(report, tokenized, plan)
        spans = _target_spans(tokenized, plan.all_targets, res.lemma_table, language)

        session_id = f"{deck_id}-s{len(state.session_order) + 1}"
        self._append(
            state,
            SESSION_STARTED,
            {
                "session_id": session_id,
                "mode": mode,
                "seed": seed,
                "new_words": list(plan.new_words),
                "review_words": list(plan.review_words),
                "c": plan.c,
                "shortfall": plan.shortfall,
            },
        )
        self._append(
            state,
            STORY_STORED,
            {
                "session_id": session_id,
                "story": trace.final_story,
                "target_counts": report.target_counts,
                "target_spans": spans,
                "iterations_used": trace.iterations_used,
                "metrics": {
                    "mean_target_occurrences": metrics.mean_target_occurrences,
                    "introduced_fraction": metrics.introduced_fraction,
                    "length": metrics.length,
                    "oov_fraction": metrics.oov_fraction,
                },
            },
        )
        return self.session_view(session_id)

    def session_view(self, session_id: str) -> dict:
        deck_id = session_id.rsplit("-s", 1)[0]
        state = self._state(deck_id)
        if session_id not in state.sessions:
            raise KeyError(session_id)
        sess = state.sessions[session_id]
        plan, story = sess["plan"], sess["story"]
        targets = [
            {"word": w, "required_count": plan["c"], "kind": "new"}
            for w in plan["new_words"]
        ] + [
            {"word": w, "required_count": 1, "kind": "review"}
            for w in plan["review_words"]
        ]
        return {
            "session_id": session_id,
            "deck_id": deck_id,
            "mode": plan["mode"],
            "story": story["story"] if story else None,
            "targets": targets,
            "target_counts": story["target_counts"] if story else {},
            "target_spans": story["target_spans"] if story else {},
            "metrics": story["metrics"] if story else None,
        }

    def submit_review(self, deck_id: str, word: str, grade: str,
                      timestamp: datetime | None = None) -> dict:
        state = self._state(deck_id)
        assert state.deck is not None
        if grade not in GRADE_QUALITY:
            raise InvalidGrade(f"grade must be one of {sorted(GRADE_QUALITY)}, got {grade!r}")
        exposed = any(
            word in s["plan"]["new_words"] or word in s["plan"]["review_words"]
            for s in state.sessions.values()
        )
        if not exposed and state.deck.card_for(word) is None:
            raise UnknownWord(f"{word!r} has no card and no session exposure in {deck_id}")
        when = timestamp or self.config.clock()
        self._append(
            state,
            REVIEW_GRADED,
            {
                "word": word,
                "grade": grade,
                "quality": GRADE_QUALITY[grade],
                "timestamp": when.isoformat(),
            },
        )
        card = state.deck.card_for(word)
        assert card is not None
        return {
            "word": word,
            "ease_factor": card.ease_factor,
            "interval_days": card.interval_days,
            "repetitions": card.repetitions,
            "due_at": card.due_at.isoformat(),
        }

    def deck_stats(self, deck_id: str) -> dict:
        state = self._state(deck_id)
        assert state.deck is not None
        res = self._resources(state.lexicon_ref)
        now = self.config.clock()
        learned = [c for c in state.deck.cards.values() if c.history]
        try:
            new_available = len(unlearned_next_level_words(state.deck, res.lexicon))
        except NoNextLevel:
            new_available = 0
        recent = [
            {
                "session_id": sid,
                "new_words": state.sessions[sid]["plan"]["new_words"],
                "review_words": state.sessions[sid]["plan"]["review_words"],
            }
            for sid in state.session_order[-10:]
        ]
        return {
            "deck_id": deck_id,
            "due_today": sum(1 for c in learned if c.due_at <= now),
            "new_available": new_available,
            "total_learned": len(learned),
            "recent_sessions": recent,
        }


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(service: SessionService) -> FastAPI:
    app = FastAPI(title="vocabstory session service", version="1")

    @app.exception_handler(KeyError)
    async def not_found(request: Request, exc: KeyError):
        return _error(404, "not_found", f"unknown resource: {exc}")

    @app.exception_handler(VocabStoryError)
    async def domain_error(request: Request, exc: VocabStoryError):
        status = {
            UnknownLexicon: 404,
            UnknownWord: 404,
            InvalidGrade: 400,
            NoNextLevel: 409,
        }.get(type(exc), 502)
        return _error(status, type(exc).__name__, str(exc))

    @app.post("/v1/decks", status_code=201)
    async def create_deck(body: dict):
        deck_id = service.create_deck(
            language=body["language"],
            learner_level=body["learner_level"],
            lexicon_ref=body["lexicon"],
        )
        return {"deck_id": deck_id}

    @app.post("/v1/decks/{deck_id}/sessions", status_code=201)
    async def start_session(deck_id: str, body: dict | None = None):
        body = body or {}
        return service.start_session(
            deck_id,
            mode=body.get("mode", SessionMode.NEW_ONLY),
            n_new=body.get("n_new", 10),
            n_review=body.get("n_review", 0),
            seed=body.get("seed"),
        )

    @app.get("/v1/sessions/{session_id}")
    async def get_session(session_id: str):
        return service.session_view(session_id)

    @app.post("/v1/decks/{deck_id}/reviews")
    async def submit_review(deck_id: str, body: dict):
        ts = datetime.fromisoformat(body["timestamp"]) if body.get("timestamp") else None
        return service.submit_review(deck_id, body["word"], body["grade"], ts)

    @app.get("/v1/decks/{deck_id}/stats")
    async def deck_stats(deck_id: str):
        return service.deck_stats(deck_id)

    return app
