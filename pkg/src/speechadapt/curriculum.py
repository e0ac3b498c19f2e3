"""Prompt curriculum: what the user records next.

Cold start chunks the greedy biphone cover into short prompts. After that,
words are ranked by difficult-phoneme density and re-chained into sentences
through a deterministic template engine, with an optional external
text-generation client behind a validation gate. Planning is pure: the same
profile snapshot, strategy and nonce always yield the same plan.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .errors import ColdStartIncomplete, NoFillableTemplate, ProtocolViolation, Timeout, Transport
from .phonemes import Lexicon, greedy_biphone_cover, phonemes_of
from .recognizer import AdaptiveModel, derive_rng
from .uncertainty import DifficultyEntry, phoneme_difficulty_score

COLD_START_BUDGET = 500
COLD_START_CHUNK = 8
MIN_SENTENCE_WORDS = 5
MAX_SENTENCE_WORDS = 8
TARGET_PHONEME_COUNT = 3


class Strategy(Enum):
    UNCERTAINTY = "uncertainty"
    RANDOM = "random"
    COVERAGE_ONLY = "coverage"


@dataclass(frozen=True)
class PromptPlan:
    round: int
    prompts: tuple[tuple[str, ...], ...]
    rationale: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.prompts) != len(self.rationale):
            raise ValueError("one rationale per prompt")

    @property
    def words(self) -> list[str]:
        return [w for prompt in self.prompts for w in prompt]


@dataclass(frozen=True)
class SentenceTemplate:
    """Fixed words plus ``<category>`` slots, 5 to 8 tokens, at least one slot."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if not MIN_SENTENCE_WORDS <= len(self.tokens) <= MAX_SENTENCE_WORDS:
            raise ValueError("template must have 5 to 8 tokens")
        if not any(self._is_slot(t) for t in self.tokens):
            raise ValueError("template needs at least one open slot")

    @staticmethod
    def _is_slot(token: str) -> bool:
        return token.startswith("<") and token.endswith(">") and len(token) > 2

    @classmethod
    def parse(cls, line: str) -> "SentenceTemplate":
        return cls(tuple(line.split()))

    @property
    def slot_categories(self) -> list[str]:
        return [t[1:-1] for t in self.tokens if self._is_slot(t)]

    def fill(self, choices: Sequence[str]) -> tuple[str, ...]:
        out, it = [], iter(choices)
        for token in self.tokens:
            out.append(next(it) if self._is_slot(token) else token)
        return tuple(out)


def load_templates(path: str | Path) -> list[SentenceTemplate]:
    templates = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            templates.append(SentenceTemplate.parse(line))
    return templates


def cold_start_plan(
    lexicon: Lexicon, budget: int = COLD_START_BUDGET, chunk_size: int = COLD_START_CHUNK
) -> PromptPlan:
    """Greedy-coverage words chunked into reading prompts, order preserved."""
    report = greedy_biphone_cover(lexicon, budget=budget, target_coverage=1.0)
    prompts, rationale = [], []
    for start in range(0, len(report.chosen), chunk_size):
        chunk = report.chosen[start : start + chunk_size]
        prompts.append(chunk)
        phonemes = sorted({p for w in chunk for p in phonemes_of(w, lexicon)})
        rationale.append(tuple(phonemes))
    return PromptPlan(round=0, prompts=tuple(prompts), rationale=tuple(rationale))


def score_words(
    lexicon: Lexicon,
    difficulty: Mapping[str, DifficultyEntry],
    words: Sequence[str] | None = None,
) -> list[tuple[str, float]]:
    """Words ranked by mean difficulty of their phonemes, descending."""
    candidates = words if words is not None else lexicon.words()
    scored = []
    for word in candidates:
        pron = phonemes_of(word, lexicon)
        score = sum(difficulty[p].phd_score for p in pron) / len(pron)
        scored.append((word, score))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored


class TextGenerationClient:
    """HTTP client for an external sentence generator."""

    def __init__(self, endpoint: str, timeout: float = 10.0, client=None):
        self.endpoint = endpoint
        self.timeout = timeout
        self._client = client

    def generate(self, seed_words: Sequence[str], target_phonemes: Sequence[str], n: int) -> list[str]:
        import httpx

        request = {
            "seed_words": list(seed_words),
            "target_phonemes": list(target_phonemes),
            "n": n,
        }
        client = self._client or httpx.Client(timeout=self.timeout)
        try:
            try:
                response = client.post(self.endpoint, json=request, timeout=self.timeout)
            except httpx.TimeoutException as exc:
                raise Timeout(f"generator timed out: {exc}") from exc
            except httpx.HTTPError as exc:
                raise Transport(f"generator unreachable: {exc}") from exc
            if response.status_code != 200:
                raise Transport(f"generator returned status {response.status_code}")
            try:
                sentences = response.json()["sentences"]
            except (ValueError, KeyError, TypeError) as exc:
                raise ProtocolViolation(f"bad generator response: {exc}") from exc
            if not isinstance(sentences, list) or not all(isinstance(s, str) for s in sentences):
                raise ProtocolViolation("sentences must be a list of strings")
            return sentences
        finally:
            if self._client is None:
                client.close()


def _fill_from_templates(
    ranked_words: Sequence[tuple[str, float]],
    templates: Sequence[SentenceTemplate],
    n_sentences: int,
    lexicon: Lexicon,
) -> list[tuple[str, ...]]:
    by_category: dict[str, list[str]] = {}
    for word, _ in ranked_words:
        entry = lexicon.get(word)
        if entry is not None and entry.category:
            by_category.setdefault(entry.category, []).append(word)
    cursors: dict[str, int] = {c: 0 for c in by_category}

    def next_word(category: str, used: set[str]) -> str | None:
        pool = by_category.get(category)
        if not pool:
            return None
        start = cursors[category]
        for step in range(len(pool)):
            word = pool[(start + step) % len(pool)]
            if word not in used:
                cursors[category] = (start + step + 1) % len(pool)
                return word
        return None

    sentences: list[tuple[str, ...]] = []
    t = 0
    while len(sentences) < n_sentences:
        filled = None
        for attempt in range(len(templates)):
            template = templates[(t + attempt) % len(templates)]
            used: set[str] = set()
            choices = []
            saved = dict(cursors)
            for category in template.slot_categories:
                word = next_word(category, used)
                if word is None:
                    choices = None
                    cursors.update(saved)
                    break
                used.add(word)
                choices.append(word)
            if choices is not None:
                filled = template.fill(choices)
                t = (t + attempt + 1) % len(templates)
                break
        if filled is None:
            raise NoFillableTemplate("no template slot matches any ranked word's category")
        sentences.append(filled)
    return sentences


def rechain_sentences(
    ranked_words: Sequence[tuple[str, float]],
    templates: Sequence[SentenceTemplate],
    n_sentences: int,
    lexicon: Lexicon,
    target_phonemes: Sequence[str] = (),
    generator: TextGenerationClient | None = None,
    round_index: int = 0,
) -> PromptPlan:
    """Sentences dense in the highest-ranked words.

    Template slots are filled with the best category-compatible words, no
    word reused within a sentence, rotating through the ranking across
    sentences. A configured generator is tried first; each returned sentence
    must contain at least one target word and only lexicon-resolvable words,
    and any shortfall is topped up from the templates.
    """
    if n_sentences < 1:
        raise ValueError("n_sentences must be >= 1")
    if generator is None and not templates:
        raise ValueError("templates required when no generator is configured")

    sentences: list[tuple[str, ...]] = []
    if generator is not None:
        seed_words = [w for w, _ in ranked_words[: n_sentences * 2]]
        target_words = {w.casefold() for w, _ in ranked_words[: max(1, n_sentences)]}
        try:
            raw = generator.generate(seed_words, list(target_phonemes), n_sentences)
        except (Transport, ProtocolViolation):
            raw = []
        for sentence in raw[:n_sentences]:
            words = tuple(sentence.split())
            if not words or any(w not in lexicon for w in words):
                continue
            if not any(w.casefold() in target_words for w in words):
                continue
            sentences.append(words)
    if len(sentences) < n_sentences:
        sentences += _fill_from_templates(
            ranked_words, templates, n_sentences - len(sentences), lexicon
        )

    rationale = []
    targets = set(target_phonemes)
    for sentence in sentences:
        present = {p for w in sentence for p in phonemes_of(w, lexicon)}
        rationale.append(tuple(sorted(present & targets if targets else present)))
    return PromptPlan(
        round=round_index, prompts=tuple(sentences), rationale=tuple(rationale)
    )


class PlanningProfile(Protocol):
    """What the prompt selector needs to know about a profile."""

    lexicon: Lexicon

    @property
    def model(self) -> AdaptiveModel: ...

    @property
    def train_words(self) -> list[str]: ...

    @property
    def coverage_order(self) -> list[str]: ...

    @property
    def coverage_cursor(self) -> int: ...

    @property
    def cold_start_complete(self) -> bool: ...

    @property
    def templates(self) -> list[SentenceTemplate]: ...

    @property
    def words_per_prompt(self) -> int: ...


def select_next_prompts(
    profile: PlanningProfile,
    n: int,
    strategy: Strategy,
    nonce: int,
    round_index: int = 0,
    generator: TextGenerationClient | None = None,
) -> PromptPlan:
    """Next n prompts under the given selection strategy."""
    if n == 0:
        return PromptPlan(round=round_index, prompts=(), rationale=())
    lexicon = profile.lexicon
    per_prompt = profile.words_per_prompt

    if strategy is Strategy.UNCERTAINTY:
        if not profile.cold_start_complete:
            raise ColdStartIncomplete("uncertainty strategy requires a completed cold start")
        difficulty = phoneme_difficulty_score(profile.model)
        ranked = score_words(lexicon, difficulty, words=profile.train_words)
        by_difficulty = sorted(
            difficulty.values(), key=lambda e: (-e.phd_score, e.phoneme)
        )
        targets = [e.phoneme for e in by_difficulty[:TARGET_PHONEME_COUNT]]
        if profile.templates:
            return rechain_sentences(
                ranked,
                profile.templates,
                n,
                lexicon,
                target_phonemes=targets,
                generator=generator,
                round_index=round_index,
            )
        words = [w for w, _ in ranked]
        prompts, rationale = [], []
        for i in range(n):
            chunk = tuple(words[i * per_prompt : (i + 1) * per_prompt])
            if not chunk:
                break
            prompts.append(chunk)
            present = {p for w in chunk for p in phonemes_of(w, lexicon)}
            rationale.append(tuple(sorted(present & set(targets))))
        return PromptPlan(round=round_index, prompts=tuple(prompts), rationale=tuple(rationale))

    if strategy is Strategy.RANDOM:
        rng = derive_rng(nonce, 0x52414E44)
        pool = list(profile.train_words)
        prompts = []
        for _ in range(n):
            size = min(per_prompt, len(pool))
            picks = rng.choice(len(pool), size=size, replace=False)
            prompts.append(tuple(pool[i] for i in picks))
        return PromptPlan(
            round=round_index,
            prompts=tuple(prompts),
            rationale=tuple(() for _ in prompts),
        )

    if strategy is Strategy.COVERAGE_ONLY:
        order = profile.coverage_order
        cursor = profile.coverage_cursor
        prompts = []
        for i in range(n):
            chunk = tuple(
                order[(cursor + i * per_prompt + j) % len(order)]
                for j in range(per_prompt)
            )
            prompts.append(chunk)
        return PromptPlan(
            round=round_index,
            prompts=tuple(prompts),
            rationale=tuple(() for _ in prompts),
        )

    raise ValueError(f"unknown strategy {strategy!r}")
