"""Uncertainty analytics over ensembles and Dirichlet posteriors.

Per-word uncertainty is the normalized entropy of the ensemble's empirical
word distribution; per-phoneme epistemic uncertainty is the mutual
information between a Dirichlet row and one categorical draw from it. The
two combine into the per-phoneme difficulty score that steers the
curriculum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .phonemes import Lexicon
from .recognizer import (
    DEFAULT_TOP_K,
    AdaptiveModel,
    HypothesisSet,
    SlotDecoder,
    Utterance,
    expected_confusion,
    variation_pass,
)

DEFAULT_THRESHOLDS = (0.15, 0.30)
DEFAULT_LAMBDA = 1.0

# Bernoulli-number coefficients of the asymptotic expansion
# psi(x) ~ ln x - 1/(2x) - sum_n B_{2n} / (2n x^{2n}).
_PSI_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
_PSI_SHIFT = 10.0


def digamma(x: float) -> float:
    """psi(x) for x > 0 via recurrence shift plus the asymptotic series."""
    if x <= 0:
        raise ValueError("digamma defined here for positive arguments only")
    acc = 0.0
    while x < _PSI_SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for coeff in _PSI_COEFFS:
        series += coeff * power
        power *= inv2
    return acc + math.log(x) - 0.5 / x - series


class Band(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True)
class SlotDistribution:
    slot_index: int
    mass: dict[str, float]


@dataclass(frozen=True)
class AnnotatedWord:
    word: str
    uncertainty: float
    band: Band
    alternatives: tuple[str, ...] | None = None

    def to_payload(self) -> dict:
        payload = {
            "word": self.word,
            "uncertainty": self.uncertainty,
            "band": self.band.value,
        }
        if self.alternatives is not None:
            payload["alternatives"] = list(self.alternatives)
        return payload


@dataclass(frozen=True)
class AnnotatedTranscript:
    slots: tuple[AnnotatedWord, ...]

    def to_payload(self) -> dict:
        return {"slots": [s.to_payload() for s in self.slots]}

    @classmethod
    def from_payload(cls, payload: Mapping) -> "AnnotatedTranscript":
        slots = tuple(
            AnnotatedWord(
                word=s["word"],
                uncertainty=s["uncertainty"],
                band=Band(s["band"]),
                alternatives=tuple(s["alternatives"]) if "alternatives" in s else None,
            )
            for s in payload["slots"]
        )
        return cls(slots)


def slot_distribution(hypothesis_set: HypothesisSet, slot_index: int) -> SlotDistribution:
    """Empirical word distribution of the M sampled passes at one slot."""
    if not 0 <= slot_index < hypothesis_set.slots:
        raise ValueError("slot index out of range")
    counts: dict[str, int] = {}
    for hyp in hypothesis_set.sampled:
        counts[hyp[slot_index]] = counts.get(hyp[slot_index], 0) + 1
    m = hypothesis_set.M
    return SlotDistribution(slot_index, {w: c / m for w, c in sorted(counts.items())})


def normalized_entropy(dist: SlotDistribution, M: int) -> float:
    """Shannon entropy in nats over ln(M), clamped to [0, 1]."""
    if M < 2:
        raise ValueError("M must be >= 2")
    h = -sum(p * math.log(p) for p in dist.mass.values() if p > 0)
    return min(1.0, max(0.0, h / math.log(M)))


def band_of(uncertainty: float, thresholds: tuple[float, float] = DEFAULT_THRESHOLDS) -> Band:
    low, high = thresholds
    if uncertainty >= high:
        return Band.HIGH
    if uncertainty >= low:
        return Band.MEDIUM
    return Band.LOW


def annotate(
    hypothesis_set: HypothesisSet,
    model: AdaptiveModel,
    lexicon: Lexicon,
    utterance: Utterance,
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS,
    k: int = DEFAULT_TOP_K,
    decoder: SlotDecoder | None = None,
) -> AnnotatedTranscript:
    """Coherent-pass words with per-slot uncertainty bands.

    High-band slots carry the variation-pass top-k alternatives (coherent
    word first); other slots are left untouched.
    """
    words = hypothesis_set.coherent_words
    uncertainties = [
        normalized_entropy(slot_distribution(hypothesis_set, s), hypothesis_set.M)
        for s in range(hypothesis_set.slots)
    ]
    bands = [band_of(u, thresholds) for u in uncertainties]
    flagged = [s for s, b in enumerate(bands) if b is Band.HIGH]
    alternatives = variation_pass(
        utterance, hypothesis_set, flagged, model, lexicon, k=k, decoder=decoder
    )
    slots = tuple(
        AnnotatedWord(
            word=words[s],
            uncertainty=uncertainties[s],
            band=bands[s],
            alternatives=tuple(alternatives[s]) if s in alternatives else None,
        )
        for s in range(hypothesis_set.slots)
    )
    return AnnotatedTranscript(slots)


def expected_row_entropy(alpha_row: Sequence[float]) -> float:
    """E[H(pi)] for pi ~ Dirichlet(alpha): psi(A+1) - sum (a_q/A) psi(a_q+1)."""
    row = np.asarray(alpha_row, dtype=np.float64)
    if np.any(row <= 0):
        raise ValueError("alpha entries must be positive")
    total = float(row.sum())
    acc = digamma(total + 1.0)
    for a in row:
        acc -= (a / total) * digamma(float(a) + 1.0)
    return acc


def phoneme_mutual_information(alpha_row: Sequence[float]) -> float:
    """Epistemic spread of one confusion row: H(mean) - E[H], >= 0 by Jensen."""
    row = np.asarray(alpha_row, dtype=np.float64)
    if np.any(row <= 0):
        raise ValueError("alpha entries must be positive")
    mean = row / row.sum()
    h_mean = -float(np.sum(mean * np.log(mean)))
    mi = h_mean - expected_row_entropy(row)
    if mi < -1e-12:
        raise AssertionError(f"mutual information came out negative: {mi}")
    return max(0.0, mi)


@dataclass(frozen=True)
class DifficultyEntry:
    phoneme: str
    error_rate: float
    epistemic_mi: float
    phd_score: float


def phoneme_difficulty_score(
    model: AdaptiveModel, lam: float = DEFAULT_LAMBDA
) -> dict[str, DifficultyEntry]:
    """Per-phoneme difficulty: error rate plus lambda-weighted epistemic MI."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    mean = expected_confusion(model).rows
    table: dict[str, DifficultyEntry] = {}
    for i, phoneme in enumerate(model.inventory.symbols):
        error_rate = 1.0 - float(mean[i, i])
        mi = phoneme_mutual_information(model.alpha[i])
        table[phoneme] = DifficultyEntry(
            phoneme=phoneme,
            error_rate=error_rate,
            epistemic_mi=mi,
            phd_score=error_rate + lam * mi,
        )
    return table


def export_difficulty_csv(table: Mapping[str, DifficultyEntry]) -> str:
    """CSV report sorted by descending difficulty."""
    lines = ["phoneme,error_rate,epistemic_mi,phd_score"]
    entries = sorted(table.values(), key=lambda e: (-e.phd_score, e.phoneme))
    for e in entries:
        lines.append(f"{e.phoneme},{e.error_rate!r},{e.epistemic_mi!r},{e.phd_score!r}")
    return "\n".join(lines) + "\n"
