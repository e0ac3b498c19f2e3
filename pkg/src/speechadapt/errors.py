"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the HTTP layer can
map exceptions to ``{"error": code, "detail": ...}`` payloads without a
separate registry.
"""

from __future__ import annotations


class SpeechAdaptError(Exception):
    """Base class for all domain errors."""

    code = "error"

    @property
    def detail(self) -> str:
        return str(self)


class UnknownWord(SpeechAdaptError):
    code = "unknown_word"


class EmptyUniverse(SpeechAdaptError):
    code = "empty_universe"


class EmptyReference(SpeechAdaptError):
    code = "empty_reference"


class BadLexicon(SpeechAdaptError):
    code = "bad_lexicon"


class BadConfig(SpeechAdaptError):
    code = "bad_config"


class BadSpec(SpeechAdaptError):
    code = "bad_spec"


class UnknownProfile(SpeechAdaptError):
    code = "unknown_profile"


class UnknownPrompt(SpeechAdaptError):
    code = "unknown_prompt"


class UnknownUtterance(SpeechAdaptError):
    code = "unknown_utterance"


class UnknownSlot(SpeechAdaptError):
    code = "unknown_slot"


class AlternativeMismatch(SpeechAdaptError):
    code = "alternative_mismatch"


class NothingToAdapt(SpeechAdaptError):
    code = "nothing_to_adapt"


class ColdStartIncomplete(SpeechAdaptError):
    code = "cold_start_incomplete"


class NoFillableTemplate(SpeechAdaptError):
    code = "no_fillable_template"


class TooShort(SpeechAdaptError):
    code = "too_short"


class UnsupportedFormat(SpeechAdaptError):
    code = "unsupported_format"


class GateRejected(SpeechAdaptError):
    """Recording failed the SNR gate; carries the full report."""

    code = "gate_rejected"

    def __init__(self, report):
        super().__init__(f"snr {report.snr_db:.2f} dB below threshold {report.threshold_db:.2f} dB")
        self.report = report


class CorruptLog(SpeechAdaptError):
    code = "corrupt_log"


class Transport(SpeechAdaptError):
    code = "transport"


class Timeout(Transport):
    code = "timeout"


class ProtocolViolation(SpeechAdaptError):
    code = "protocol_violation"
