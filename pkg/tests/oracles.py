"""Independent reference implementations used only as test oracles.

These deliberately use different algorithms from the package code paths they
check: exhaustive subset search instead of greedy, full path enumeration
instead of dynamic programming, and a row-only Levenshtein with no backtrace.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping, Sequence


def brute_force_min_cover(universe: frozenset, sets_by_word: Mapping[str, frozenset]) -> int:
    """Size of the smallest word subset covering the universe (exhaustive)."""
    words = sorted(sets_by_word)
    for size in range(1, len(words) + 1):
        for combo in itertools.combinations(words, size):
            covered = frozenset().union(*(sets_by_word[w] for w in combo))
            if covered >= universe:
                return size
    raise AssertionError("universe not coverable by the given sets")


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Plain rolling-row edit distance, no alignment."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def enumerate_channel_mass(
    observed: Sequence[int],
    ref: Sequence[int],
    matrix,
    delta: float,
    iota: float,
) -> float:
    """Total probability mass over every monotone edit path, by recursion.

    Path factors: delete ref phoneme -> delta, emit ref as observed ->
    (1 - delta) * matrix[p][q], insert observed phoneme -> iota / P.
    Sums with math.fsum for an accumulation order unlike the DP's.
    """
    p_count = len(matrix)
    ins = iota / p_count
    terms: list[float] = []

    def walk(i: int, j: int, acc: float) -> None:
        if i == len(ref) and j == len(observed):
            terms.append(acc)
            return
        if i < len(ref):
            walk(i + 1, j, acc * delta)
            if j < len(observed):
                walk(i + 1, j + 1, acc * (1.0 - delta) * matrix[ref[i]][observed[j]])
        if j < len(observed):
            walk(i, j + 1, acc * ins)

    walk(0, 0, 1.0)
    return math.fsum(terms)


def brute_force_slot_ranking(
    observed: Sequence[str],
    lexicon,
    matrix_rows,
    inventory,
    delta: float,
    iota: float,
    priors: Mapping[str, float],
) -> list[tuple[str, float]]:
    """Full decode ranking via path enumeration; descending score then word."""
    obs_ids = [inventory.index(p) for p in observed]
    total_prior = math.fsum(priors.values())
    scored = []
    for entry in lexicon.entries():
        ref_ids = [inventory.index(p) for p in entry.pron]
        mass = enumerate_channel_mass(obs_ids, ref_ids, matrix_rows, delta, iota)
        loglik = math.log(mass) if mass > 0 else float("-inf")
        score = math.log(priors[entry.word]) - math.log(total_prior) + loglik
        scored.append((entry.word, score))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored
