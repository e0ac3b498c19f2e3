"""Profile lifecycle engine behind the HTTP API.

Every state change is an event: live operations validate, compute a payload
(any randomness keyed on the profile seed and the event's sequence number),
then run the same ``_apply`` used for log replay. Loading a profile replays
the latest snapshot plus the event tail and lands on byte-identical state.

Per-profile mutations are serialized through one lock per profile; decoding
and sampling work on immutable model snapshots.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..audio_gate import DEFAULT_THRESHOLD_DB, decode_wav, estimate_snr
from ..curriculum import (
    COLD_START_BUDGET,
    COLD_START_CHUNK,
    PromptPlan,
    SentenceTemplate,
    Strategy,
    cold_start_plan,
    select_next_prompts,
)
from ..errors import (
    AlternativeMismatch,
    BadConfig,
    BadLexicon,
    CorruptLog,
    EmptyUniverse,
    GateRejected,
    NothingToAdapt,
    UnknownPrompt,
    UnknownProfile,
    UnknownSlot,
    UnknownUtterance,
)
from ..phonemes import Lexicon, LexiconEntry, PhonemeInventory, word_error_rate
from ..recognizer import (
    DEFAULT_PASSES,
    DEFAULT_PRIOR_OTHER,
    DEFAULT_PRIOR_SELF,
    DEFAULT_TOP_K,
    AdaptiveModel,
    SlotDecoder,
    SpeakerProfile,
    Utterance,
    UtteranceSource,
    derive_rng,
    ensemble_pass,
    expected_confusion,
    external_recognize_detailed,
    reset_acoustic,
    simulate_utterance,
    update_from_correction,
)
from ..speakers import make_speaker, speaker_from_payload, speaker_to_payload
from ..uncertainty import (
    DEFAULT_THRESHOLDS,
    AnnotatedTranscript,
    annotate,
    phoneme_difficulty_score,
)
from .store import SNAPSHOT_EVERY, Event, EventStore

SECONDS_PER_PROMPT_WORD = 2.0
SECONDS_PER_CORRECTION = 5.0
DEFAULT_EVAL_SIZE = 100
_EVAL_SALT = 0x4556414C


def _eval_nonce(seq: int, index: int) -> int:
    return (seq << 20) | index


@dataclass
class ProfileState:
    """Full mutable state of one personalization profile."""

    profile_id: str
    seed: int
    mode: str
    strategy: Strategy
    words_per_prompt: int
    cold_start_budget: int
    cold_start_chunk: int
    eval_size: int
    eval_renders: int
    passes: int
    top_k: int
    thresholds: tuple[float, float]
    gate_threshold_db: float
    difficulty_lambda: float
    inventory: PhonemeInventory
    base_entries: list[LexiconEntry]
    custom_entries: list[LexiconEntry]
    model: AdaptiveModel
    speaker: SpeakerProfile | None
    recognizer_endpoint: str | None
    eval_words: list[str]
    templates: list[SentenceTemplate]
    cold_plan: PromptPlan
    plan_cursor: int = 0
    coverage_cursor: int = 0
    issued_prompts: dict = field(default_factory=dict)
    utterances: dict = field(default_factory=dict)
    transcripts: dict = field(default_factory=dict)
    applied_corrections: set = field(default_factory=set)
    model_version: int = 0
    lexicon_version: int = 0
    corrections_since_round: int = 0
    round_index: int = 0
    metrics_history: list = field(default_factory=list)
    seconds_interaction: float = 0.0
    created_at: float = 0.0
    updated_at: float = 0.0
    next_seq: int = 1

    # -- planning profile protocol -------------------------------------
    @property
    def lexicon(self) -> Lexicon:
        return Lexicon(self.inventory, self.base_entries + self.custom_entries)

    @property
    def train_words(self) -> list[str]:
        excluded = set(self.eval_words)
        return [e.word for e in self.base_entries if e.word not in excluded] + [
            e.word for e in self.custom_entries
        ]

    @property
    def coverage_order(self) -> list[str]:
        plan_words = list(self.cold_plan.words)
        rest = sorted(w for w in self.train_words if w not in set(plan_words))
        return plan_words + rest

    @property
    def cold_start_complete(self) -> bool:
        return self.plan_cursor >= len(self.cold_plan.prompts)

    def train_lexicon(self) -> Lexicon:
        excluded = set(self.eval_words)
        entries = [e for e in self.base_entries if e.word not in excluded]
        return Lexicon(self.inventory, entries + self.custom_entries)

    # -- serialization ---------------------------------------------------
    def to_snapshot(self) -> dict:
        return {
            "profile_id": self.profile_id,
            "seed": self.seed,
            "mode": self.mode,
            "strategy": self.strategy.value,
            "words_per_prompt": self.words_per_prompt,
            "cold_start_budget": self.cold_start_budget,
            "cold_start_chunk": self.cold_start_chunk,
            "eval_size": self.eval_size,
            "eval_renders": self.eval_renders,
            "passes": self.passes,
            "top_k": self.top_k,
            "thresholds": list(self.thresholds),
            "gate_threshold_db": self.gate_threshold_db,
            "difficulty_lambda": self.difficulty_lambda,
            "inventory": list(self.inventory.symbols),
            "base_entries": [_entry_to_list(e) for e in self.base_entries],
            "custom_entries": [_entry_to_list(e) for e in self.custom_entries],
            "alpha": self.model.alpha.tolist(),
            "model_params": {
                "delta": self.model.delta,
                "iota": self.model.iota,
                "prior_self": self.model.prior_self,
                "prior_other": self.model.prior_other,
                "lexical_prior": dict(self.model.lexical_prior),
            },
            "speaker": speaker_to_payload(self.speaker) if self.speaker else None,
            "recognizer_endpoint": self.recognizer_endpoint,
            "eval_words": list(self.eval_words),
            "templates": [" ".join(t.tokens) for t in self.templates],
            "plan_cursor": self.plan_cursor,
            "coverage_cursor": self.coverage_cursor,
            "issued_prompts": self.issued_prompts,
            "utterances": self.utterances,
            "transcripts": self.transcripts,
            "applied_corrections": sorted(self.applied_corrections),
            "model_version": self.model_version,
            "lexicon_version": self.lexicon_version,
            "corrections_since_round": self.corrections_since_round,
            "round_index": self.round_index,
            "metrics_history": self.metrics_history,
            "seconds_interaction": self.seconds_interaction,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "next_seq": self.next_seq,
        }

    @classmethod
    def from_snapshot(cls, snap: Mapping) -> "ProfileState":
        inventory = PhonemeInventory(snap["inventory"])
        base_entries = [_entry_from_list(e) for e in snap["base_entries"]]
        custom_entries = [_entry_from_list(e) for e in snap["custom_entries"]]
        params = snap["model_params"]
        model = AdaptiveModel(
            inventory=inventory,
            alpha=np.array(snap["alpha"]),
            delta=params["delta"],
            iota=params["iota"],
            prior_self=params["prior_self"],
            prior_other=params["prior_other"],
            lexical_prior=dict(params["lexical_prior"]),
        )
        state = cls(
            profile_id=snap["profile_id"],
            seed=snap["seed"],
            mode=snap["mode"],
            strategy=Strategy(snap["strategy"]),
            words_per_prompt=snap["words_per_prompt"],
            cold_start_budget=snap["cold_start_budget"],
            cold_start_chunk=snap["cold_start_chunk"],
            eval_size=snap["eval_size"],
            eval_renders=snap["eval_renders"],
            passes=snap["passes"],
            top_k=snap["top_k"],
            thresholds=tuple(snap["thresholds"]),
            gate_threshold_db=snap["gate_threshold_db"],
            difficulty_lambda=snap["difficulty_lambda"],
            inventory=inventory,
            base_entries=base_entries,
            custom_entries=custom_entries,
            model=model,
            speaker=speaker_from_payload(snap["speaker"]) if snap["speaker"] else None,
            recognizer_endpoint=snap["recognizer_endpoint"],
            eval_words=list(snap["eval_words"]),
            templates=[SentenceTemplate.parse(t) for t in snap["templates"]],
            cold_plan=_rebuild_cold_plan(inventory, base_entries, snap),
        )
        state.plan_cursor = snap["plan_cursor"]
        state.coverage_cursor = snap["coverage_cursor"]
        state.issued_prompts = dict(snap["issued_prompts"])
        state.utterances = dict(snap["utterances"])
        state.transcripts = dict(snap["transcripts"])
        state.applied_corrections = {tuple(c) for c in snap["applied_corrections"]}
        state.model_version = snap["model_version"]
        state.lexicon_version = snap["lexicon_version"]
        state.corrections_since_round = snap["corrections_since_round"]
        state.round_index = snap["round_index"]
        state.metrics_history = list(snap["metrics_history"])
        state.seconds_interaction = snap["seconds_interaction"]
        state.created_at = snap["created_at"]
        state.updated_at = snap["updated_at"]
        state.next_seq = snap["next_seq"]
        return state


def _entry_to_list(entry: LexiconEntry) -> list:
    return [entry.word, list(entry.pron), entry.weight, entry.category]


def _entry_from_list(raw: Sequence) -> LexiconEntry:
    return LexiconEntry(word=raw[0], pron=tuple(raw[1]), weight=raw[2], category=raw[3])


def _rebuild_cold_plan(inventory, base_entries, snap) -> PromptPlan:
    excluded = set(snap["eval_words"])
    entries = [e for e in base_entries if e.word not in excluded]
    lexicon = Lexicon(inventory, entries)
    return cold_start_plan(
        lexicon, budget=snap["cold_start_budget"], chunk_size=snap["cold_start_chunk"]
    )


class SessionEngine:
    """Serializes per-profile writes; reads return plain payload copies."""

    def __init__(self, store: EventStore | None = None, clock=time.time, recognizer_client=None):
        self.store = store
        self.clock = clock
        self.recognizer_client = recognizer_client
        self._profiles: dict[str, ProfileState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._decoders: dict[str, tuple[int, SlotDecoder]] = {}

    # -- plumbing --------------------------------------------------------
    def _state(self, profile_id: str) -> ProfileState:
        try:
            return self._profiles[profile_id]
        except KeyError:
            raise UnknownProfile(f"no profile {profile_id!r}") from None

    def _lock(self, profile_id: str) -> threading.Lock:
        with self._registry_lock:
            if profile_id not in self._locks:
                self._locks[profile_id] = threading.Lock()
            return self._locks[profile_id]

    def _emit(self, state: ProfileState, kind: str, payload: dict) -> Event:
        event = Event(seq=state.next_seq, kind=kind, timestamp=self.clock(), payload=payload)
        _apply(state, event)
        if self.store is not None:
            self.store.append(state.profile_id, event)
            if event.seq % SNAPSHOT_EVERY == 0:
                self.store.write_snapshot(state.profile_id, event.seq, state.to_snapshot())
        return event

    def _decoder(self, state: ProfileState) -> SlotDecoder:
        cached = self._decoders.get(state.profile_id)
        if cached is not None and cached[0] == state.lexicon_version:
            return cached[1]
        decoder = SlotDecoder(
            state.lexicon, delta=state.model.delta, iota=state.model.iota
        )
        self._decoders[state.profile_id] = (state.lexicon_version, decoder)
        return decoder

    # -- operations ------------------------------------------------------
    def create_profile(self, config: Mapping) -> dict:
        now = self.clock()
        payload = _build_creation_payload(config, now)
        profile_id = payload["profile_id"]
        with self._registry_lock:
            self._locks[profile_id] = threading.Lock()
        with self._locks[profile_id]:
            event = Event(seq=1, kind="ProfileCreated", timestamp=now, payload=payload)
            state = _apply_created(event)
            self._profiles[profile_id] = state
            if self.store is not None:
                self.store.append(profile_id, event)
        return self.profile_summary(profile_id)

    def profile_summary(self, profile_id: str) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            return {
                "profile_id": state.profile_id,
                "mode": state.mode,
                "strategy": state.strategy.value,
                "seed": state.seed,
                "lexicon_size": len(state.base_entries) + len(state.custom_entries),
                "custom_words": [e.word for e in state.custom_entries],
                "eval_size": state.eval_size,
                "cold_start": {
                    "chunks": len(state.cold_plan.prompts),
                    "recorded": min(state.plan_cursor, len(state.cold_plan.prompts)),
                    "complete": state.cold_start_complete,
                },
                "round_index": state.round_index,
                "corrections_since_round": state.corrections_since_round,
                "minutes_interaction": state.seconds_interaction / 60.0,
                "created_at": state.created_at,
                "updated_at": state.updated_at,
            }

    def next_prompts(self, profile_id: str, n: int) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            if n <= 0:
                return {"prompts": [], "phase": "none"}
            if not state.cold_start_complete:
                chunks = state.cold_plan.prompts[state.plan_cursor : state.plan_cursor + n]
                rationale = state.cold_plan.rationale[state.plan_cursor : state.plan_cursor + n]
                phase = "cold_start"
                plan = list(zip(chunks, rationale))
            else:
                plan_obj = select_next_prompts(
                    state,
                    n,
                    state.strategy,
                    nonce=state.next_seq,
                    round_index=state.round_index,
                )
                phase = "adaptive"
                plan = list(zip(plan_obj.prompts, plan_obj.rationale))
            issued = []
            for words, rationale in plan:
                ref = f"prompt-{state.next_seq}"
                self._emit(
                    state,
                    "PromptIssued",
                    {
                        "prompt_ref": ref,
                        "words": list(words),
                        "rationale": list(rationale),
                        "phase": phase,
                        "round": state.round_index,
                    },
                )
                issued.append({"prompt_ref": ref, "words": list(words), "rationale": list(rationale)})
            return {"prompts": issued, "phase": phase}

    def submit_recording(
        self,
        profile_id: str,
        prompt_ref: str,
        wav_bytes: bytes | None = None,
        simulate: bool = False,
    ) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            prompt = state.issued_prompts.get(prompt_ref)
            if prompt is None:
                raise UnknownPrompt(f"prompt {prompt_ref!r} was not issued for this profile")
            words = prompt["words"]
            snr_payload = None
            if wav_bytes is not None:
                clip = decode_wav(wav_bytes)
                report = estimate_snr(clip, threshold_db=state.gate_threshold_db)
                snr_payload = report.to_payload()
                if not report.accepted:
                    self._emit(
                        state,
                        "RecordingRejected",
                        {"prompt_ref": prompt_ref, "snr": snr_payload},
                    )
                    raise GateRejected(report)
            elif not simulate:
                raise BadConfig("recording needs WAV bytes or the simulate flag")

            seq = state.next_seq
            utterance_id = f"utt-{seq}"
            if state.mode == "simulated":
                utt = simulate_utterance(state.speaker, words, state.lexicon, nonce=seq)
                observed = [list(slot) for slot in utt.observed]
                source = "simulated"
            else:
                observed = [[] for _ in words]
                source = "external"
            self._emit(
                state,
                "RecordingAccepted",
                {
                    "utterance_id": utterance_id,
                    "prompt_ref": prompt_ref,
                    "words": list(words),
                    "observed": observed,
                    "source": source,
                    "snr": snr_payload,
                    "seconds_cost": SECONDS_PER_PROMPT_WORD * len(words),
                },
            )
            return {"utterance_id": utterance_id, "snr": snr_payload}

    def transcribe(self, profile_id: str, utterance_id: str) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            record = state.utterances.get(utterance_id)
            if record is None:
                raise UnknownUtterance(f"no utterance {utterance_id!r}")
            cached = state.transcripts.get(utterance_id)
            if cached is not None and cached["model_version"] == state.model_version:
                return self._transcript_payload(utterance_id, cached)

            seq = state.next_seq
            if state.mode == "simulated":
                utt = Utterance(
                    id=utterance_id,
                    prompt_words=tuple(record["words"]),
                    observed=tuple(tuple(s) for s in record["observed"]),
                    source=UtteranceSource.SIMULATED,
                )
                decoder = self._decoder(state)
                hs = ensemble_pass(
                    utt, state.model, state.lexicon, M=state.passes, nonce=seq, decoder=decoder
                )
                observed = record["observed"]
            else:
                hs, per_hyp_phonemes = external_recognize_detailed(
                    state.recognizer_endpoint,
                    audio_ref=utterance_id,
                    num_passes=state.passes,
                    client=self.recognizer_client,
                )
                observed = [list(slot) for slot in per_hyp_phonemes[hs.coherent]]
                utt = Utterance(
                    id=utterance_id,
                    prompt_words=tuple(record["words"]),
                    observed=tuple(tuple(s) for s in observed),
                    source=UtteranceSource.EXTERNAL,
                )
                decoder = self._decoder(state)
            transcript = annotate(
                hs,
                state.model,
                state.lexicon,
                utt,
                thresholds=state.thresholds,
                k=state.top_k,
                decoder=decoder,
            )
            self._emit(
                state,
                "TranscriptIssued",
                {
                    "utterance_id": utterance_id,
                    "nonce": seq,
                    "hypotheses": [list(h) for h in hs.hypotheses],
                    "coherent_index": hs.coherent,
                    "passes": hs.M,
                    "observed": observed,
                    "transcript": transcript.to_payload(),
                    "model_version": state.model_version,
                },
            )
            return self._transcript_payload(utterance_id, state.transcripts[utterance_id])

    def get_transcript(self, profile_id: str, utterance_id: str) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            cached = state.transcripts.get(utterance_id)
            if cached is None:
                raise UnknownUtterance(f"no transcript for {utterance_id!r}")
            return self._transcript_payload(utterance_id, cached)

    @staticmethod
    def _transcript_payload(utterance_id: str, record: dict) -> dict:
        return {
            "utterance_id": utterance_id,
            "transcript": record["transcript"],
            "passes": record["passes"],
        }

    def apply_correction(self, profile_id: str, correction: Mapping) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            utterance_id = correction.get("utterance_id")
            record = state.transcripts.get(utterance_id)
            if record is None:
                raise UnknownUtterance(f"no transcript for {utterance_id!r}")
            slots = record["transcript"]["slots"]
            slot_index = correction.get("slot_index")
            if not isinstance(slot_index, int) or not 0 <= slot_index < len(slots):
                raise UnknownSlot(f"slot {slot_index!r} out of range")
            chosen = (correction.get("chosen_word") or "").strip()
            source = correction.get("source", "topk")
            if source not in ("topk", "manual"):
                raise BadConfig(f"unknown correction source {source!r}")
            if not chosen or any(ch.isspace() for ch in chosen):
                raise BadConfig("chosen_word must be a single non-empty word")
            key = (utterance_id, slot_index, chosen)
            if key in state.applied_corrections:
                return {"applied": False, "duplicate": True}
            slot = slots[slot_index]
            if source == "topk":
                offered = slot.get("alternatives") or []
                if chosen not in offered:
                    raise AlternativeMismatch(
                        f"{chosen!r} was not among the offered alternatives"
                    )

            observed_slot = list(record["observed"][slot_index])
            known = chosen in state.lexicon
            custom_pron = None
            if not known and observed_slot:
                custom_pron = observed_slot
            self._emit(
                state,
                "CorrectionApplied",
                {
                    "utterance_id": utterance_id,
                    "slot_index": slot_index,
                    "chosen_word": chosen,
                    "source": source,
                    "previous_word": slot["word"],
                    "observed_slot": observed_slot,
                    "custom_pron": custom_pron,
                    "seconds_cost": SECONDS_PER_CORRECTION,
                },
            )
            return {"applied": True, "duplicate": False}

    def run_adaptation_round(self, profile_id: str) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            if state.corrections_since_round < 1:
                raise NothingToAdapt("no new corrections since the last round")
            seq = state.next_seq
            wer_eval = None
            if state.mode == "simulated" and state.eval_words:
                wer_eval = _evaluate_wer(state, self._decoder(state), seq)
            difficulty = phoneme_difficulty_score(state.model, lam=state.difficulty_lambda)
            mean_phd = float(np.mean([d.phd_score for d in difficulty.values()]))
            entry = {
                "round": state.round_index + 1,
                "wer_eval": wer_eval,
                "minutes_interaction": state.seconds_interaction / 60.0,
                "strategy": state.strategy.value,
                "n_corrections": state.corrections_since_round,
                "mean_phd": mean_phd,
            }
            self._emit(
                state,
                "AdaptationRound",
                {
                    "metrics": entry,
                    "difficulty": {
                        p: [d.error_rate, d.epistemic_mi, d.phd_score]
                        for p, d in difficulty.items()
                    },
                },
            )
            return entry

    def reset_acoustic_baseline(self, profile_id: str) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            self._emit(state, "AcousticReset", {})
        return self.profile_summary(profile_id)

    def metrics(self, profile_id: str) -> dict:
        with self._lock(profile_id):
            state = self._state(profile_id)
            return {"history": [dict(m) for m in state.metrics_history]}

    def evaluate(self, profile_id: str, nonce: int | None = None) -> dict:
        """Read-only eval-set decode under the current model; appends nothing."""
        with self._lock(profile_id):
            state = self._state(profile_id)
            if state.mode != "simulated" or not state.eval_words:
                raise BadConfig("evaluation needs a simulated profile with eval words")
            seq = state.next_seq if nonce is None else nonce
            wer, pairs = _eval_details(state, self._decoder(state), seq)
            return {"wer_eval": wer, "pairs": pairs}

    def difficulty(self, profile_id: str) -> list[dict]:
        with self._lock(profile_id):
            state = self._state(profile_id)
            table = phoneme_difficulty_score(state.model, lam=state.difficulty_lambda)
            entries = sorted(table.values(), key=lambda e: (-e.phd_score, e.phoneme))
            return [
                {
                    "phoneme": e.phoneme,
                    "error_rate": e.error_rate,
                    "epistemic_mi": e.epistemic_mi,
                    "phd_score": e.phd_score,
                }
                for e in entries
            ]

    # -- persistence -----------------------------------------------------
    def load_profile(self, profile_id: str) -> dict:
        """Restore a profile from the store: latest snapshot plus tail replay."""
        if self.store is None:
            raise BadConfig("engine has no store configured")
        snapshot = self.store.latest_snapshot(profile_id)
        if snapshot is None:
            events = self.store.read_events(profile_id)
            state = replay_events(events)
        else:
            seq, snap = snapshot
            state = ProfileState.from_snapshot(snap)
            for event in self.store.read_events(profile_id, after_seq=seq):
                _apply(state, event)
        with self._registry_lock:
            self._locks[profile_id] = threading.Lock()
            self._profiles[profile_id] = state
        return self.profile_summary(profile_id)


def replay_events(events: Sequence[Event]) -> ProfileState:
    """Rebuild state from scratch by replaying a full event sequence."""
    if not events or events[0].kind != "ProfileCreated":
        raise BadConfig("event log must start with ProfileCreated")
    state = _apply_created(events[0])
    for event in events[1:]:
        _apply(state, event)
    return state


def _eval_details(
    state: ProfileState, decoder: SlotDecoder, seq: int
) -> tuple[float, list[tuple[str, str]]]:
    """Fresh simulated renderings of the eval words, decoded with the mean matrix.

    Each word is rendered ``eval_renders`` times so the reported WER is not
    hostage to one lucky or unlucky channel draw.
    """
    observed_slots = []
    refs = []
    lexicon = state.lexicon
    renders = max(1, state.eval_renders)
    for r in range(renders):
        for i, word in enumerate(state.eval_words):
            utt = simulate_utterance(
                state.speaker, [word], lexicon,
                nonce=_eval_nonce(seq, r * len(state.eval_words) + i),
            )
            observed_slots.append(utt.observed[0])
            refs.append(word)
    decoded = decoder.argmax_words(observed_slots, expected_confusion(state.model).rows)[0]
    wer = word_error_rate(refs, decoded).wer
    return wer, list(zip(refs, decoded))


def _evaluate_wer(state: ProfileState, decoder: SlotDecoder, seq: int) -> float:
    return _eval_details(state, decoder, seq)[0]


# -- event application ----------------------------------------------------

def _build_creation_payload(config: Mapping, now: float) -> dict:
    mode = config.get("mode", "simulated")
    if mode not in ("simulated", "external"):
        raise BadConfig(f"unknown mode {mode!r}")
    seed = config.get("seed")
    if not isinstance(seed, int):
        raise BadConfig("config needs an integer seed")

    inventory = None
    if config.get("inventory"):
        inventory = PhonemeInventory(config["inventory"])
    elif config.get("inventory_ref"):
        inventory = PhonemeInventory.from_file(config["inventory_ref"])
    try:
        if config.get("lexicon_ref"):
            lexicon = Lexicon.from_file(config["lexicon_ref"], inventory)
        elif config.get("lexicon"):
            lexicon = Lexicon.parse_lines(config["lexicon"], inventory)
        else:
            raise BadConfig("config needs lexicon_ref or inline lexicon lines")
    except BadLexicon as exc:
        raise BadConfig(f"bad lexicon: {exc}") from exc

    speaker = None
    if mode == "simulated":
        if config.get("speaker"):
            speaker = speaker_from_payload(config["speaker"])
        elif config.get("speaker_spec"):
            speaker = make_speaker(config["speaker_spec"], lexicon.inventory)
        else:
            raise BadConfig("simulated mode requires speaker or speaker_spec")
        if speaker.inventory != lexicon.inventory:
            raise BadConfig("speaker inventory does not match the lexicon inventory")
    recognizer_endpoint = config.get("recognizer_endpoint")
    if mode == "external" and not recognizer_endpoint:
        raise BadConfig("external mode requires recognizer_endpoint")

    words = sorted(e.word for e in lexicon.entries())
    eval_size = int(config.get("eval_size", DEFAULT_EVAL_SIZE))
    if not 0 <= eval_size < len(words):
        raise BadConfig(
            f"eval_size must lie in [0, {len(words) - 1}] for a {len(words)}-word lexicon"
        )
    rng = derive_rng(seed, _EVAL_SALT)
    eval_idx = sorted(rng.choice(len(words), size=eval_size, replace=False).tolist())
    eval_words = [words[i] for i in eval_idx]

    strategy = Strategy(config.get("strategy", "uncertainty"))
    thresholds = tuple(config.get("thresholds", DEFAULT_THRESHOLDS))
    payload = {
        "profile_id": config.get("profile_id") or uuid.uuid4().hex,
        "seed": seed,
        "mode": mode,
        "strategy": strategy.value,
        "words_per_prompt": int(config.get("words_per_prompt", 6)),
        "cold_start_budget": int(config.get("cold_start_budget", COLD_START_BUDGET)),
        "cold_start_chunk": int(config.get("cold_start_chunk", COLD_START_CHUNK)),
        "eval_size": eval_size,
        "eval_renders": int(config.get("eval_renders", 1)),
        "passes": int(config.get("passes", DEFAULT_PASSES)),
        "top_k": int(config.get("top_k", DEFAULT_TOP_K)),
        "thresholds": list(thresholds),
        "gate_threshold_db": float(config.get("gate_threshold_db", DEFAULT_THRESHOLD_DB)),
        "difficulty_lambda": float(config.get("difficulty_lambda", 1.0)),
        "prior_self": float(config.get("prior_self", DEFAULT_PRIOR_SELF)),
        "prior_other": float(config.get("prior_other", DEFAULT_PRIOR_OTHER)),
        "inventory": list(lexicon.inventory.symbols),
        "lexicon_entries": [_entry_to_list(e) for e in lexicon.entries()],
        "speaker": speaker_to_payload(speaker) if speaker else None,
        "recognizer_endpoint": recognizer_endpoint,
        "eval_words": eval_words,
        "templates": list(config.get("templates", [])),
        "created_at": now,
    }

    # Validate that a cold-start plan exists and compute the round-0 baseline.
    state = _apply_created(Event(seq=1, kind="ProfileCreated", timestamp=now, payload=payload))
    baseline = None
    if mode == "simulated" and eval_words:
        decoder = SlotDecoder(state.lexicon, delta=state.model.delta, iota=state.model.iota)
        wer0 = _evaluate_wer(state, decoder, seq=1)
        difficulty = phoneme_difficulty_score(state.model, lam=state.difficulty_lambda)
        baseline = {
            "round": 0,
            "wer_eval": wer0,
            "minutes_interaction": 0.0,
            "strategy": strategy.value,
            "n_corrections": 0,
            "mean_phd": float(np.mean([d.phd_score for d in difficulty.values()])),
        }
    payload["baseline"] = baseline
    return payload


def _apply_created(event: Event) -> ProfileState:
    p = event.payload
    inventory = PhonemeInventory(p["inventory"])
    base_entries = [_entry_from_list(e) for e in p["lexicon_entries"]]
    excluded = set(p["eval_words"])
    train_entries = [e for e in base_entries if e.word not in excluded]
    try:
        cold_plan = cold_start_plan(
            Lexicon(inventory, train_entries),
            budget=p["cold_start_budget"],
            chunk_size=p["cold_start_chunk"],
        )
    except (EmptyUniverse, BadLexicon) as exc:
        raise BadConfig(f"cannot build a cold-start plan: {exc}") from exc
    state = ProfileState(
        profile_id=p["profile_id"],
        seed=p["seed"],
        mode=p["mode"],
        strategy=Strategy(p["strategy"]),
        words_per_prompt=p["words_per_prompt"],
        cold_start_budget=p["cold_start_budget"],
        cold_start_chunk=p["cold_start_chunk"],
        eval_size=p["eval_size"],
        eval_renders=p.get("eval_renders", 1),
        passes=p["passes"],
        top_k=p["top_k"],
        thresholds=tuple(p["thresholds"]),
        gate_threshold_db=p["gate_threshold_db"],
        difficulty_lambda=p["difficulty_lambda"],
        inventory=inventory,
        base_entries=base_entries,
        custom_entries=[],
        model=AdaptiveModel.fresh(
            inventory,
            prior_self=p.get("prior_self", DEFAULT_PRIOR_SELF),
            prior_other=p.get("prior_other", DEFAULT_PRIOR_OTHER),
        ),
        speaker=speaker_from_payload(p["speaker"]) if p["speaker"] else None,
        recognizer_endpoint=p["recognizer_endpoint"],
        eval_words=list(p["eval_words"]),
        templates=[SentenceTemplate.parse(t) for t in p["templates"]],
        cold_plan=cold_plan,
        created_at=event.timestamp,
        updated_at=event.timestamp,
        next_seq=2,
    )
    if p.get("baseline"):
        state.metrics_history.append(dict(p["baseline"]))
    return state


def _apply(state: ProfileState, event: Event) -> None:
    if event.seq != state.next_seq:
        raise CorruptLog(f"event seq {event.seq} does not follow state seq {state.next_seq}")
    handler = _HANDLERS.get(event.kind)
    if handler is None:
        raise CorruptLog(f"unknown event kind {event.kind!r}")
    handler(state, event.payload)
    state.updated_at = event.timestamp
    state.next_seq = event.seq + 1


def _on_prompt_issued(state: ProfileState, p: dict) -> None:
    state.issued_prompts[p["prompt_ref"]] = {
        "words": list(p["words"]),
        "phase": p["phase"],
        "round": p["round"],
    }


def _on_recording_rejected(state: ProfileState, p: dict) -> None:
    pass


def _on_recording_accepted(state: ProfileState, p: dict) -> None:
    prompt = state.issued_prompts.get(p["prompt_ref"], {})
    state.utterances[p["utterance_id"]] = {
        "words": list(p["words"]),
        "observed": [list(s) for s in p["observed"]],
        "prompt_ref": p["prompt_ref"],
        "source": p["source"],
    }
    state.seconds_interaction += p["seconds_cost"]
    if prompt.get("phase") == "cold_start":
        state.plan_cursor += 1
    else:
        state.coverage_cursor += len(p["words"])


def _on_transcript_issued(state: ProfileState, p: dict) -> None:
    state.transcripts[p["utterance_id"]] = {
        "transcript": p["transcript"],
        "hypotheses": p["hypotheses"],
        "coherent_index": p["coherent_index"],
        "passes": p["passes"],
        "observed": [list(s) for s in p["observed"]],
        "nonce": p["nonce"],
        "model_version": p["model_version"],
    }


def _on_correction_applied(state: ProfileState, p: dict) -> None:
    chosen = p["chosen_word"]
    if p.get("custom_pron"):
        entry = LexiconEntry(word=chosen, pron=tuple(p["custom_pron"]), weight=1.0)
        if chosen not in state.lexicon:
            state.custom_entries.append(entry)
            state.lexicon_version += 1
    lexicon = state.lexicon
    if chosen in lexicon:
        state.model = update_from_correction(
            state.model, chosen, tuple(p["observed_slot"]), lexicon
        )
    state.model_version += 1
    state.corrections_since_round += 1
    state.seconds_interaction += p["seconds_cost"]
    state.applied_corrections.add((p["utterance_id"], p["slot_index"], chosen))
    record = state.transcripts.get(p["utterance_id"])
    if record is not None:
        slot = dict(record["transcript"]["slots"][p["slot_index"]])
        slot["word"] = chosen
        slot["uncertainty"] = 0.0
        slot["band"] = "low"
        slot.pop("alternatives", None)
        record["transcript"]["slots"][p["slot_index"]] = slot


def _on_adaptation_round(state: ProfileState, p: dict) -> None:
    state.metrics_history.append(dict(p["metrics"]))
    state.round_index = p["metrics"]["round"]
    state.corrections_since_round = 0


def _on_acoustic_reset(state: ProfileState, p: dict) -> None:
    state.model = reset_acoustic(state.model)
    state.model_version += 1
    state.plan_cursor = 0
    state.coverage_cursor = 0


_HANDLERS = {
    "PromptIssued": _on_prompt_issued,
    "RecordingAccepted": _on_recording_accepted,
    "RecordingRejected": _on_recording_rejected,
    "TranscriptIssued": _on_transcript_issued,
    "CorrectionApplied": _on_correction_applied,
    "AdaptationRound": _on_adaptation_round,
    "AcousticReset": _on_acoustic_reset,
}
