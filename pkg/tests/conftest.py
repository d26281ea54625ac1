import random

import pytest

from vocabstory.lexicon import Language, LemmaTable, LevelTag, Lexicon, Scheme


@pytest.fixture
def en_lexicon():
    levels = {
        "A1": ["the", "cat", "sat", "on", "mat", "a", "dog", "big", "run"],
        "A2": ["sofa", "doze", "jump", "quick"],
        "B1": ["gleam", "haggle", "wander", "marsh"],
        "B2": ["ubiquitous", "reluctant", "carriage", "timely"],
        "C1": ["perfunctory", "obstreperous"],
        "C2": ["sesquipedalian"],
    }
    entries = {w: LevelTag(Scheme.CEFR, lv) for lv, ws in levels.items() for w in ws}
    return Lexicon(language=Language.EN, scheme=Scheme.CEFR, entries=entries)


@pytest.fixture
def en_lemmas():
    return LemmaTable(
        language=Language.EN,
        table={
            "dozed": frozenset({"doze"}),
            "ran": frozenset({"run"}),
            "cats": frozenset({"cat"}),
            "haggled": frozenset({"haggle"}),
        },
    )


@pytest.fixture
def zh_lexicon():
    words = {
        "1": ["你好", "我", "是", "人"],
        "2": ["学习", "朋友"],
        "3": ["电影院", "旅客"],
        "4": ["单调", "团结"],
        "5": ["必要"],
        "6": ["难道"],
        "7": ["条件"],
    }
    entries = {w: LevelTag(Scheme.HSK, lv) for lv, ws in words.items() for w in ws}
    return Lexicon(language=Language.ZH, scheme=Scheme.HSK, entries=entries)


def brute_force_verify(story_text, allowed, targets, language, lemma_table):
    """Independent re-scan oracle for verify_story, written against the
    verifier's contract rather than its implementation."""
    import unicodedata

    def sep(ch):
        return ch.isspace() or unicodedata.category(ch).startswith("P")

    norm_chars = []
    for ch in story_text:
        norm_chars.append(" " if sep(ch) else ch.lower())
    norm = " ".join("".join(norm_chars).split())

    if language is Language.ZH:
        tokens = [c for c in norm if c != " "]
        allowed_chars = set()
        for w in allowed:
            allowed_chars.update(w)
        bad = [t for t in tokens if t not in allowed_chars and not t.isdigit()]
        counts = {}
        for t in targets:
            c, start = 0, 0
            while True:
                i = norm.find(t, start)
                if i < 0:
                    break
                c += 1
                start = i + len(t)
            counts[t] = c
        return set(bad), len(bad), len(tokens), counts

    tokens = norm.split()
    bad = []
    counts = {t: 0 for t in targets}
    for tok in tokens:
        cands = {tok} | set(lemma_table.lookup(tok))
        if not (cands & set(allowed)) and not tok.isdigit():
            bad.append(tok)
        for t in targets:
            if t in cands:
                counts[t] += 1
    return set(bad), len(bad), len(tokens), counts


def random_story_case(rng: random.Random, language: Language):
    """A random (story, allowed, targets, lemma_table) tuple for oracle tests."""
    if language is Language.ZH:
        alphabet = list("你好我是人学习朋友电影院旅客单调团结必要难道条件水火山")
        vocab = {"".join(rng.sample(alphabet, rng.randint(1, 3))) for _ in range(12)}
        vocab |= {rng.choice(alphabet) for _ in range(6)}
        vocab = sorted(vocab)
        targets = frozenset(rng.sample(vocab, min(3, len(vocab))))
        allowed = frozenset(rng.sample(vocab, max(len(vocab) // 2, 4))) | targets
        pieces = []
        for _ in range(rng.randint(0, 60)):
            pieces.append(rng.choice(alphabet + ["。", "，", " ", "！"]))
        story = "".join(pieces)
        table = LemmaTable(language=language, table={})
        return story, allowed, targets, table

    words = [f"w{i}" for i in range(30)] + ["cat", "dog", "run", "ran", "dozed", "doze"]
    vocab = sorted(set(rng.sample(words, 20)))
    targets = frozenset(rng.sample(vocab, 3))
    allowed = frozenset(rng.sample(vocab, 12)) | targets
    surfaces = {}
    for w in rng.sample(vocab, 5):
        surfaces[w + "x"] = frozenset({w})
    table = LemmaTable(language=language, table=surfaces)
    pool = words + list(surfaces) + ["zzz", "qqq"]
    story_words = [rng.choice(pool) for _ in range(rng.randint(0, 80))]
    # add punctuation and case noise
    noisy = []
    for w in story_words:
        if rng.random() < 0.2:
            w = w.capitalize()
        if rng.random() < 0.2:
            w += rng.choice([",", ".", "!", ";"])
        noisy.append(w)
    story = " ".join(noisy)
    return story, allowed, targets, table
