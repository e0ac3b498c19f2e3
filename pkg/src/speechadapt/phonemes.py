"""Phoneme inventory, lexicon, biphone coverage and alignment utilities.

Everything here is immutable after construction and safe to share across
threads. Pronunciations are tuples of phoneme symbols; a biphone is an
ordered pair of consecutive within-word phonemes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import BadLexicon, EmptyReference, EmptyUniverse, UnknownWord

Pron = tuple[str, ...]
Biphone = tuple[str, str]


class PhonemeInventory:
    """Ordered set of phoneme symbols with dense integer ids."""

    def __init__(self, symbols: Iterable[str]):
        self._symbols: tuple[str, ...] = tuple(symbols)
        if not self._symbols:
            raise BadLexicon("inventory must contain at least one phoneme")
        self._index: dict[str, int] = {}
        for i, sym in enumerate(self._symbols):
            if not sym or any(ch.isspace() for ch in sym):
                raise BadLexicon(f"bad phoneme symbol {sym!r}")
            if sym in self._index:
                raise BadLexicon(f"duplicate phoneme symbol {sym!r}")
            self._index[sym] = i

    @classmethod
    def from_file(cls, path: str | Path) -> "PhonemeInventory":
        symbols = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                symbols.append(line)
        return cls(symbols)

    @property
    def symbols(self) -> tuple[str, ...]:
        return self._symbols

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownWord(f"phoneme {symbol!r} not in inventory") from None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index

    def __len__(self) -> int:
        return len(self._symbols)

    def __iter__(self) -> Iterator[str]:
        return iter(self._symbols)

    def __eq__(self, other) -> bool:
        return isinstance(other, PhonemeInventory) and self._symbols == other._symbols

    def __hash__(self) -> int:
        return hash(self._symbols)

    def __repr__(self) -> str:
        return f"PhonemeInventory({len(self)} phonemes)"


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    pron: Pron
    weight: float = 1.0
    category: str | None = None

    def __post_init__(self):
        if not self.pron:
            raise BadLexicon(f"empty pronunciation for {self.word!r}")
        if self.weight < 0:
            raise BadLexicon(f"negative weight for {self.word!r}")


class Lexicon:
    """Case-folded word -> pronunciation map over a fixed inventory."""

    def __init__(self, inventory: PhonemeInventory, entries: Iterable[LexiconEntry]):
        self.inventory = inventory
        self._entries: dict[str, LexiconEntry] = {}
        for entry in entries:
            key = entry.word.casefold()
            if key in self._entries:
                raise BadLexicon(f"duplicate lexicon word {entry.word!r}")
            for p in entry.pron:
                if p not in inventory:
                    raise BadLexicon(f"word {entry.word!r} uses unknown phoneme {p!r}")
            self._entries[key] = entry
        if not self._entries:
            raise BadLexicon("lexicon must not be empty")

    @classmethod
    def from_file(cls, path: str | Path, inventory: PhonemeInventory | None = None) -> "Lexicon":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls.parse_lines(lines, inventory)

    @classmethod
    def parse_lines(
        cls, lines: Iterable[str], inventory: PhonemeInventory | None = None
    ) -> "Lexicon":
        """Parse the tab-separated lexicon format.

        ``word<TAB>phoneme phoneme ...<TAB>weight<TAB>category`` where weight
        and category are optional; a non-numeric third column is read as the
        category. ``#``-prefixed lines are comments.
        """
        entries = []
        seen_phonemes: list[str] = []
        for lineno, raw in enumerate(lines, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise BadLexicon(f"line {lineno}: expected word<TAB>phonemes")
            word, pron_field = cols[0].strip(), cols[1].strip()
            pron = tuple(pron_field.split())
            weight, category = 1.0, None
            rest = [c.strip() for c in cols[2:] if c.strip()]
            if rest:
                try:
                    weight = float(rest[0])
                    if len(rest) > 1:
                        category = rest[1]
                except ValueError:
                    category = rest[0]
            for p in pron:
                if p not in seen_phonemes:
                    seen_phonemes.append(p)
            entries.append(LexiconEntry(word=word, pron=pron, weight=weight, category=category))
        if inventory is None:
            inventory = PhonemeInventory(seen_phonemes)
        return cls(inventory, entries)

    def to_lines(self) -> list[str]:
        lines = []
        for entry in self.entries():
            cols = [entry.word, " ".join(entry.pron), repr(entry.weight)]
            if entry.category is not None:
                cols.append(entry.category)
            lines.append("\t".join(cols))
        return lines

    def entries(self) -> list[LexiconEntry]:
        return list(self._entries.values())

    def words(self) -> list[str]:
        return [e.word for e in self._entries.values()]

    def get(self, word: str) -> LexiconEntry | None:
        return self._entries.get(word.casefold())

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def with_entry(self, entry: LexiconEntry) -> "Lexicon":
        """New lexicon with one extra (custom) entry; existing word is an error."""
        if entry.word in self:
            raise BadLexicon(f"word {entry.word!r} already in lexicon")
        return Lexicon(self.inventory, self.entries() + [entry])


def phonemes_of(word: str, lexicon: Lexicon) -> Pron:
    entry = lexicon.get(word)
    if entry is None:
        raise UnknownWord(f"word {word!r} not in lexicon")
    return entry.pron


def biphones_of(pron: Sequence[str]) -> set[Biphone]:
    """All consecutive within-word phoneme pairs; length-1 prons yield the empty set."""
    return {(pron[i], pron[i + 1]) for i in range(len(pron) - 1)}


@dataclass(frozen=True)
class CoverageReport:
    chosen: tuple[str, ...]
    covered: frozenset[Biphone]
    universe_size: int
    coverage_fraction: float
    steps: tuple[tuple[str, int], ...]


def greedy_biphone_cover(
    lexicon: Lexicon, budget: int, target_coverage: float = 1.0
) -> CoverageReport:
    """Greedy maximum-marginal-gain selection of words until the biphone
    universe (all biphones realizable by this lexicon) is covered to
    ``target_coverage`` or ``budget`` words are chosen.

    Tie-break: larger gain, then shorter pronunciation, then lexicographic
    word order, which makes the report deterministic.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not 0.0 < target_coverage <= 1.0:
        raise ValueError("target_coverage must be in (0, 1]")

    word_sets: list[tuple[str, Pron, set[Biphone]]] = []
    universe: set[Biphone] = set()
    for entry in lexicon.entries():
        bs = biphones_of(entry.pron)
        universe |= bs
        if bs:
            word_sets.append((entry.word, entry.pron, bs))
    if not universe:
        raise EmptyUniverse("no lexicon entry has two or more phonemes")

    # Candidates sorted once by the static part of the tie-break.
    word_sets.sort(key=lambda t: (len(t[1]), t[0]))

    covered: set[Biphone] = set()
    chosen: list[str] = []
    steps: list[tuple[str, int]] = []
    remaining = list(word_sets)
    while len(chosen) < budget and len(covered) / len(universe) < target_coverage:
        best = None
        best_gain = 0
        for cand in remaining:
            gain = len(cand[2] - covered)
            if gain > best_gain:
                best, best_gain = cand, gain
        if best is None:
            break
        covered |= best[2]
        chosen.append(best[0])
        steps.append((best[0], best_gain))
        remaining.remove(best)

    return CoverageReport(
        chosen=tuple(chosen),
        covered=frozenset(covered),
        universe_size=len(universe),
        coverage_fraction=len(covered) / len(universe),
        steps=tuple(steps),
    )


class EditOp(Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class AlignmentStep:
    op: EditOp
    ref: str | None
    hyp: str | None


@dataclass(frozen=True)
class Alignment:
    ops: tuple[AlignmentStep, ...]
    substitutions: int
    deletions: int
    insertions: int
    ref_length: int

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def align_sequences(ref: Sequence, hyp: Sequence) -> Alignment:
    """Minimal unit-cost edit script between two token sequences.

    Backtrace preference: Match > Substitute > Delete > Insert, applied
    from the end of both sequences, so the script is deterministic.
    """
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row, prev = dist[i], dist[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ref[i - 1] != hyp[j - 1])
            row[j] = min(sub, prev[j] + 1, row[j - 1] + 1)

    ops: list[AlignmentStep] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i - 1][j - 1] == here:
            ops.append(AlignmentStep(EditOp.MATCH, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i - 1][j - 1] + 1 == here:
            ops.append(AlignmentStep(EditOp.SUBSTITUTE, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i - 1][j] + 1 == here:
            ops.append(AlignmentStep(EditOp.DELETE, ref[i - 1], None))
            i -= 1
        else:
            ops.append(AlignmentStep(EditOp.INSERT, None, hyp[j - 1]))
            j -= 1
    ops.reverse()

    subs = sum(1 for s in ops if s.op is EditOp.SUBSTITUTE)
    dels = sum(1 for s in ops if s.op is EditOp.DELETE)
    ins = sum(1 for s in ops if s.op is EditOp.INSERT)
    return Alignment(tuple(ops), subs, dels, ins, n)


@dataclass(frozen=True)
class WerResult:
    wer: float
    substitutions: int
    deletions: int
    insertions: int
    ref_length: int


def word_error_rate(ref: Sequence[str], hyp: Sequence[str]) -> WerResult:
    """(S + D + I) / N over word sequences; may exceed 1.0."""
    if not ref:
        raise EmptyReference("reference word sequence is empty")
    a = align_sequences(list(ref), list(hyp))
    return WerResult(
        wer=a.distance / a.ref_length,
        substitutions=a.substitutions,
        deletions=a.deletions,
        insertions=a.insertions,
        ref_length=a.ref_length,
    )


def harmonic_number(n: int) -> float:
    """H(n) = sum 1/i, the classic greedy set-cover approximation factor."""
    return sum(1.0 / i for i in range(1, n + 1))
