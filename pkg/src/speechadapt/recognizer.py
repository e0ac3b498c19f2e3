"""Pluggable recognizer layer.

A synthetic speaker renders prompts through a ground-truth phoneme confusion
channel; the adaptive recognizer keeps a per-phoneme Dirichlet posterior over
that channel, decodes word slots with a substitution/deletion/insertion
dynamic program, and draws posterior samples as stochastic forward passes.
An HTTP client for external recognizers speaks the documented wire protocol.

All stochastic operations are pure functions of (state, seed/nonce): the same
inputs always produce the same outputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ProtocolViolation, Timeout, Transport, UnknownWord
from .phonemes import EditOp, Lexicon, PhonemeInventory, Pron, align_sequences, phonemes_of

DEFAULT_DELTA = 0.05
DEFAULT_IOTA = 0.01
DEFAULT_PRIOR_SELF = 5.0
DEFAULT_PRIOR_OTHER = 0.1
DEFAULT_PASSES = 10
DEFAULT_TOP_K = 5

_MASK64 = (1 << 64) - 1


def derive_rng(*parts: int) -> np.random.Generator:
    """Deterministic generator from integer parts (seeds, nonces, salts)."""
    return np.random.default_rng(np.random.SeedSequence([p & _MASK64 for p in parts]))


@dataclass(eq=False)
class ConfusionMatrix:
    """Row-stochastic P x P phoneme emission matrix."""

    inventory: PhonemeInventory
    rows: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        p = len(self.inventory)
        if self.rows.shape != (p, p):
            raise ValueError(f"expected {p}x{p} matrix, got {self.rows.shape}")
        if np.any(self.rows < 0):
            raise ValueError("confusion matrix entries must be non-negative")
        sums = self.rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("confusion matrix rows must sum to 1")

    @classmethod
    def identity(cls, inventory: PhonemeInventory) -> "ConfusionMatrix":
        return cls(inventory, np.eye(len(inventory)))


@dataclass(eq=False)
class SpeakerProfile:
    """Ground-truth channel for the simulated speaker (simulation only)."""

    c_true: ConfusionMatrix
    deletion_rate: np.ndarray
    seed: int

    def __post_init__(self):
        self.deletion_rate = np.asarray(self.deletion_rate, dtype=np.float64)
        p = len(self.c_true.inventory)
        if self.deletion_rate.shape != (p,):
            raise ValueError("deletion_rate must have one entry per phoneme")
        if np.any(self.deletion_rate < 0) or np.any(self.deletion_rate > 1):
            raise ValueError("deletion_rate entries must lie in [0, 1]")

    @property
    def inventory(self) -> PhonemeInventory:
        return self.c_true.inventory


@dataclass(eq=False)
class AdaptiveModel:
    """Per-phoneme Dirichlet confusion posterior plus fixed channel rates.

    ``alpha[p][q]`` counts evidence that phoneme p is heard as q. The spread
    of each Dirichlet row is the epistemic uncertainty signal; the posterior
    mean is the working confusion matrix. Treat instances as immutable:
    updates return new models.
    """

    inventory: PhonemeInventory
    alpha: np.ndarray
    delta: float = DEFAULT_DELTA
    iota: float = DEFAULT_IOTA
    prior_self: float = DEFAULT_PRIOR_SELF
    prior_other: float = DEFAULT_PRIOR_OTHER
    lexical_prior: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        p = len(self.inventory)
        if self.alpha.shape != (p, p):
            raise ValueError(f"alpha must be {p}x{p}")
        if np.any(self.alpha <= 0):
            raise ValueError("alpha entries must be positive")
        if not 0 <= self.delta <= 0.5:
            raise ValueError("delta must lie in [0, 0.5]")
        if not 0 <= self.iota <= 0.2:
            raise ValueError("iota must lie in [0, 0.2]")

    @classmethod
    def fresh(
        cls,
        inventory: PhonemeInventory,
        delta: float = DEFAULT_DELTA,
        iota: float = DEFAULT_IOTA,
        prior_self: float = DEFAULT_PRIOR_SELF,
        prior_other: float = DEFAULT_PRIOR_OTHER,
        lexical_prior: Mapping[str, float] | None = None,
    ) -> "AdaptiveModel":
        p = len(inventory)
        alpha = np.full((p, p), prior_other)
        np.fill_diagonal(alpha, prior_self)
        return cls(
            inventory=inventory,
            alpha=alpha,
            delta=delta,
            iota=iota,
            prior_self=prior_self,
            prior_other=prior_other,
            lexical_prior=dict(lexical_prior or {}),
        )


class UtteranceSource(Enum):
    SIMULATED = "simulated"
    UPLOADED = "uploaded"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Utterance:
    id: str
    prompt_words: tuple[str, ...]
    observed: tuple[Pron, ...]
    source: UtteranceSource

    def __post_init__(self):
        if not self.observed:
            raise ValueError("utterance must have at least one slot")

    @property
    def slots(self) -> int:
        return len(self.observed)


@dataclass(frozen=True)
class HypothesisSet:
    """Slot-aligned transcription hypotheses from M stochastic passes.

    ``hypotheses[:M]`` are the posterior-sample passes; the coherent-pass
    hypothesis is one of them when it coincides with a sample, otherwise it
    is appended after them. ``coherent`` indexes it either way.
    """

    hypotheses: tuple[tuple[str, ...], ...]
    coherent: int
    M: int

    def __post_init__(self):
        if not self.hypotheses:
            raise ValueError("hypothesis set must not be empty")
        slots = len(self.hypotheses[0])
        if any(len(h) != slots for h in self.hypotheses):
            raise ValueError("all hypotheses must have the same slot count")
        if not 0 <= self.coherent < len(self.hypotheses):
            raise ValueError("coherent index out of range")
        if not 1 <= self.M <= len(self.hypotheses):
            raise ValueError("M out of range")

    @property
    def slots(self) -> int:
        return len(self.hypotheses[0])

    @property
    def sampled(self) -> tuple[tuple[str, ...], ...]:
        return self.hypotheses[: self.M]

    @property
    def coherent_words(self) -> tuple[str, ...]:
        return self.hypotheses[self.coherent]


def simulate_utterance(
    profile: SpeakerProfile,
    prompt: Sequence[str],
    lexicon: Lexicon,
    nonce: int,
) -> Utterance:
    """Render a prompt through the speaker's ground-truth channel.

    Per reference phoneme: delete with its deletion rate, otherwise emit a
    confusion sample from the matching matrix row. One uniform draw per
    phoneme for deletion, then one per surviving phoneme for emission, so
    the output is a pure function of (profile seed, nonce).
    """
    inv = profile.inventory
    prons = [phonemes_of(w, lexicon) for w in prompt]
    rng = derive_rng(profile.seed, nonce)
    cum_rows = np.cumsum(profile.c_true.rows, axis=1)
    observed: list[Pron] = []
    for pron in prons:
        ids = np.array([inv.index(p) for p in pron])
        keep = rng.random(len(ids)) >= profile.deletion_rate[ids]
        kept = ids[keep]
        draws = rng.random(len(kept))
        slot = []
        for pid, u in zip(kept, draws):
            q = int(np.searchsorted(cum_rows[pid], u, side="right"))
            slot.append(inv.symbols[min(q, len(inv) - 1)])
        observed.append(tuple(slot))
    return Utterance(
        id=f"sim-{profile.seed & _MASK64:x}-{nonce}",
        prompt_words=tuple(prompt),
        observed=tuple(observed),
        source=UtteranceSource.SIMULATED,
    )


def expected_confusion(model: AdaptiveModel) -> ConfusionMatrix:
    """Posterior mean: row p is alpha[p] / sum(alpha[p])."""
    rows = model.alpha / model.alpha.sum(axis=1, keepdims=True)
    return ConfusionMatrix(model.inventory, rows)


def sample_confusion(model: AdaptiveModel, nonce: int) -> ConfusionMatrix:
    """One stochastic forward pass: each row drawn from Dirichlet(alpha[row])."""
    rng = derive_rng(nonce, 0x5A4D504C)
    rows = np.empty_like(model.alpha)
    for i in range(rows.shape[0]):
        rows[i] = rng.dirichlet(model.alpha[i])
    rows /= rows.sum(axis=1, keepdims=True)
    return ConfusionMatrix(model.inventory, rows)


def segment_likelihood(
    observed: Sequence[str],
    ref: Sequence[str],
    matrix: ConfusionMatrix,
    delta: float = DEFAULT_DELTA,
    iota: float = DEFAULT_IOTA,
) -> float:
    """Log-probability of an observed phoneme slot given a reference pron.

    Dynamic program over (ref position, observed position): a reference
    phoneme is deleted with probability delta or emitted through the matrix
    with probability (1 - delta); a spurious observed phoneme is inserted
    with probability iota, uniform over the inventory.
    """
    if not ref:
        raise ValueError("reference pronunciation must be non-empty")
    inv = matrix.inventory
    rows = matrix.rows
    ins = iota / len(inv)
    obs_ids = [inv.index(p) for p in observed]
    ref_ids = [inv.index(p) for p in ref]
    m = len(obs_ids)

    prev = [0.0] * (m + 1)
    prev[0] = 1.0
    for j in range(1, m + 1):
        prev[j] = ins * prev[j - 1]
    for rid in ref_ids:
        cur = [0.0] * (m + 1)
        cur[0] = delta * prev[0]
        row = rows[rid]
        for j in range(1, m + 1):
            emit = (1.0 - delta) * row[obs_ids[j - 1]]
            cur[j] = delta * prev[j] + emit * prev[j - 1] + ins * cur[j - 1]
        prev = cur
    mass = prev[m]
    return math.log(mass) if mass > 0.0 else float("-inf")


class SlotDecoder:
    """Vectorized per-slot MAP decoder over a fixed lexicon.

    Precomputes padded pronunciation ids and normalized log lexical priors;
    the channel DP then runs batched over (matrices x observations x words),
    cell for cell the same arithmetic as ``segment_likelihood``.
    """

    def __init__(
        self,
        lexicon: Lexicon,
        delta: float = DEFAULT_DELTA,
        iota: float = DEFAULT_IOTA,
        lexical_prior: Mapping[str, float] | None = None,
    ):
        self.lexicon = lexicon
        self.inventory = lexicon.inventory
        self.delta = float(delta)
        self.iota = float(iota)
        entries = sorted(lexicon.entries(), key=lambda e: e.word)
        self.words: list[str] = [e.word for e in entries]
        self._prons: list[Pron] = [e.pron for e in entries]
        lens = np.array([len(p) for p in self._prons])
        self._lens = lens
        self._max_len = int(lens.max())
        idx = self.inventory.index
        padded = np.zeros((len(entries), self._max_len), dtype=np.intp)
        for w, pron in enumerate(self._prons):
            padded[w, : len(pron)] = [idx(p) for p in pron]
        self._pron_ids = padded
        prior = lexical_prior or {}
        weights = np.array([prior.get(e.word, e.weight) for e in entries], dtype=np.float64)
        if np.any(weights < 0):
            raise ValueError("lexical priors must be non-negative")
        total = weights.sum()
        if total <= 0:
            raise ValueError("lexical prior mass must be positive")
        with np.errstate(divide="ignore"):
            self._log_prior = np.log(weights) - np.log(total)

    def _observed_ids(self, observed: Sequence[str]) -> np.ndarray:
        return np.array([self.inventory.index(p) for p in observed], dtype=np.intp)

    def batched_log_scores(
        self, observed_slots: Sequence[Sequence[str]], matrices: np.ndarray
    ) -> np.ndarray:
        """(K, O, W) log posterior scores; slots must share one length."""
        if matrices.ndim == 2:
            matrices = matrices[None]
        obs = np.stack([self._observed_ids(s) for s in observed_slots])
        k_count, o_count, w_count = matrices.shape[0], len(observed_slots), len(self.words)
        m = obs.shape[1]
        ins = self.iota / len(self.inventory)
        delta = self.delta

        shape = (k_count, o_count, w_count)
        prev = np.empty((m + 1,) + shape)
        cur = np.empty_like(prev)
        out = np.empty(shape)
        prev[0] = 1.0
        for j in range(1, m + 1):
            prev[j] = ins * prev[j - 1]
        for i in range(1, self._max_len + 1):
            emit_rows = (1.0 - delta) * matrices[:, self._pron_ids[:, i - 1], :]  # (K, W, P)
            cur[0] = delta * prev[0]
            for j in range(1, m + 1):
                emit = emit_rows[:, :, obs[:, j - 1]].transpose(0, 2, 1)  # (K, O, W)
                cur[j] = delta * prev[j] + emit * prev[j - 1] + ins * cur[j - 1]
            done = self._lens == i
            if done.any():
                out[:, :, done] = cur[m][:, :, done]
            prev, cur = cur, prev
        with np.errstate(divide="ignore"):
            return self._log_prior[None, None, :] + np.log(out)

    def rank(self, observed: Sequence[str], matrix: ConfusionMatrix) -> list[tuple[str, float]]:
        scores = self.batched_log_scores([tuple(observed)], matrix.rows)[0, 0]
        order = np.argsort(-scores, kind="stable")
        return [(self.words[i], float(scores[i])) for i in order]

    def argmax_words(
        self, observed_slots: Sequence[Sequence[str]], matrices: np.ndarray
    ) -> list[list[str]]:
        """Per matrix, the best word for each slot (slots may differ in length)."""
        if matrices.ndim == 2:
            matrices = matrices[None]
        k_count = matrices.shape[0]
        result = [[None] * len(observed_slots) for _ in range(k_count)]
        by_len: dict[int, list[int]] = {}
        for s, slot in enumerate(observed_slots):
            by_len.setdefault(len(slot), []).append(s)
        for slot_idxs in by_len.values():
            scores = self.batched_log_scores(
                [observed_slots[s] for s in slot_idxs], matrices
            )
            best = np.argmax(scores, axis=2)  # (K, O); first max = lexicographic tie-break
            for k in range(k_count):
                for o, s in enumerate(slot_idxs):
                    result[k][s] = self.words[best[k, o]]
        return result


def decode_slot(
    observed_slot: Sequence[str],
    lexicon: Lexicon,
    matrix: ConfusionMatrix,
    lexical_prior: Mapping[str, float] | None = None,
    delta: float = DEFAULT_DELTA,
    iota: float = DEFAULT_IOTA,
) -> list[tuple[str, float]]:
    """Full descending (word, log score) ranking for one observed slot."""
    decoder = SlotDecoder(lexicon, delta=delta, iota=iota, lexical_prior=lexical_prior)
    return decoder.rank(observed_slot, matrix)


def coherent_pass(
    utterance: Utterance,
    model: AdaptiveModel,
    lexicon: Lexicon,
    decoder: SlotDecoder | None = None,
) -> tuple[str, ...]:
    """One word per slot: the MAP decode under the posterior-mean matrix."""
    decoder = decoder or SlotDecoder(
        lexicon, delta=model.delta, iota=model.iota, lexical_prior=model.lexical_prior
    )
    words = decoder.argmax_words(utterance.observed, expected_confusion(model).rows)[0]
    return tuple(words)


def ensemble_pass(
    utterance: Utterance,
    model: AdaptiveModel,
    lexicon: Lexicon,
    M: int = DEFAULT_PASSES,
    nonce: int = 0,
    decoder: SlotDecoder | None = None,
) -> HypothesisSet:
    """M stochastic forward passes plus the coherent pass.

    Pass m decodes every slot under ``sample_confusion(model, nonce + m)``;
    the coherent hypothesis is identified among the samples or appended.
    """
    if M < 2:
        raise ValueError("ensemble needs at least 2 passes")
    decoder = decoder or SlotDecoder(
        lexicon, delta=model.delta, iota=model.iota, lexical_prior=model.lexical_prior
    )
    matrices = np.stack(
        [sample_confusion(model, nonce + m).rows for m in range(M)]
        + [expected_confusion(model).rows]
    )
    per_matrix = decoder.argmax_words(utterance.observed, matrices)
    hypotheses = [tuple(words) for words in per_matrix[:M]]
    coherent_words = tuple(per_matrix[M])
    if coherent_words in hypotheses:
        coherent = hypotheses.index(coherent_words)
    else:
        hypotheses.append(coherent_words)
        coherent = M
    return HypothesisSet(hypotheses=tuple(hypotheses), coherent=coherent, M=M)


def variation_pass(
    utterance: Utterance,
    hypothesis_set: HypothesisSet,
    flagged_slots: Iterable[int],
    model: AdaptiveModel,
    lexicon: Lexicon,
    k: int = DEFAULT_TOP_K,
    decoder: SlotDecoder | None = None,
) -> dict[int, list[str]]:
    """Top-k re-ranking for flagged slots only; surrounding context is fixed.

    The coherent-pass word is forced into first position when the ranking
    does not already contain it.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    flagged = sorted(set(flagged_slots))
    if any(s < 0 or s >= hypothesis_set.slots for s in flagged):
        raise ValueError("flagged slot index out of range")
    decoder = decoder or SlotDecoder(
        lexicon, delta=model.delta, iota=model.iota, lexical_prior=model.lexical_prior
    )
    matrix = expected_confusion(model)
    result: dict[int, list[str]] = {}
    for slot in flagged:
        ranking = [w for w, _ in decoder.rank(utterance.observed[slot], matrix)[:k]]
        coherent_word = hypothesis_set.coherent_words[slot]
        if coherent_word not in ranking:
            ranking = [coherent_word] + ranking[: k - 1]
        result[slot] = ranking
    return result


def update_from_correction(
    model: AdaptiveModel,
    ref_word: str,
    observed_slot: Sequence[str],
    lexicon: Lexicon,
) -> AdaptiveModel:
    """Fold one validated correction into the posterior.

    Aligns the corrected word's pronunciation to the observed phonemes with
    the unit-cost aligner; every Match/Substitute pair (p, q) adds one count
    to alpha[p][q]. Deletions and insertions leave alpha unchanged (the
    channel's delta and iota stay fixed).
    """
    pron = phonemes_of(ref_word, lexicon)
    alignment = align_sequences(pron, tuple(observed_slot))
    idx = model.inventory.index
    alpha = model.alpha.copy()
    for step in alignment.ops:
        if step.op in (EditOp.MATCH, EditOp.SUBSTITUTE):
            alpha[idx(step.ref), idx(step.hyp)] += 1.0
    return replace(model, alpha=alpha)


def reset_acoustic(model: AdaptiveModel) -> AdaptiveModel:
    """Restore alpha to the prior; lexical personalization survives."""
    p = len(model.inventory)
    alpha = np.full((p, p), model.prior_other)
    np.fill_diagonal(alpha, model.prior_self)
    return replace(model, alpha=alpha)


def save_model(model: AdaptiveModel, path: str | Path) -> None:
    payload = {
        "inventory": list(model.inventory.symbols),
        "alpha": model.alpha.tolist(),
        "delta": model.delta,
        "iota": model.iota,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path, **overrides) -> AdaptiveModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return AdaptiveModel(
        inventory=PhonemeInventory(payload["inventory"]),
        alpha=np.array(payload["alpha"]),
        delta=payload["delta"],
        iota=payload["iota"],
        **overrides,
    )


def parse_hypothesis_payload(payload: dict) -> tuple[HypothesisSet, tuple[tuple[Pron, ...], ...]]:
    """Validate a recognizer wire response into a HypothesisSet.

    Returns the set plus each hypothesis's per-slot observed phonemes.
    Raises ProtocolViolation on any schema or shape violation.
    """
    try:
        slots = payload["slots"]
        raw_hyps = payload["hypotheses"]
        coherent = payload["coherent_index"]
    except (TypeError, KeyError) as exc:
        raise ProtocolViolation(f"missing field: {exc}") from None
    if not isinstance(slots, int) or slots < 1:
        raise ProtocolViolation("slots must be a positive integer")
    if not isinstance(raw_hyps, list) or not raw_hyps:
        raise ProtocolViolation("hypotheses must be a non-empty list")
    words_list: list[tuple[str, ...]] = []
    phonemes_list: list[tuple[Pron, ...]] = []
    for h in raw_hyps:
        try:
            words = h["words"]
            slot_phonemes = h["slot_phonemes"]
        except (TypeError, KeyError) as exc:
            raise ProtocolViolation(f"missing hypothesis field: {exc}") from None
        if len(words) != slots or len(slot_phonemes) != slots:
            raise ProtocolViolation("hypothesis does not have the declared slot count")
        if not all(isinstance(w, str) for w in words):
            raise ProtocolViolation("hypothesis words must be strings")
        if not all(isinstance(sp, list) and all(isinstance(p, str) for p in sp) for sp in slot_phonemes):
            raise ProtocolViolation("slot_phonemes must be lists of strings")
        words_list.append(tuple(words))
        phonemes_list.append(tuple(tuple(sp) for sp in slot_phonemes))
    if not isinstance(coherent, int) or not 0 <= coherent < len(words_list):
        raise ProtocolViolation("coherent_index out of range")
    hs = HypothesisSet(hypotheses=tuple(words_list), coherent=coherent, M=len(words_list))
    return hs, tuple(phonemes_list)


def external_recognize_detailed(
    endpoint: str,
    audio_ref: str,
    num_passes: int = DEFAULT_PASSES,
    timeout: float = 10.0,
    client=None,
) -> tuple[HypothesisSet, tuple[tuple[Pron, ...], ...]]:
    """Call an external recognizer; also return per-hypothesis slot phonemes."""
    import httpx

    request = {"audio_ref": audio_ref, "num_passes": num_passes}
    own_client = client is None
    client = client or httpx.Client(timeout=timeout)
    try:
        try:
            response = client.post(endpoint, json=request, timeout=timeout)
        except httpx.TimeoutException as exc:
            raise Timeout(f"recognizer timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise Transport(f"recognizer unreachable: {exc}") from exc
        if response.status_code != 200:
            raise Transport(f"recognizer returned status {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ProtocolViolation(f"response is not JSON: {exc}") from exc
        return parse_hypothesis_payload(payload)
    finally:
        if own_client:
            client.close()


def external_recognize(
    endpoint: str,
    audio_ref: str,
    num_passes: int = DEFAULT_PASSES,
    timeout: float = 10.0,
    client=None,
) -> HypothesisSet:
    """Call an external recognizer over the documented JSON protocol."""
    return external_recognize_detailed(
        endpoint, audio_ref, num_passes=num_passes, timeout=timeout, client=client
    )[0]
