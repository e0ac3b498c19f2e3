"""Percentile-energy SNR gate for recordings.

This is the reference implementation of the quality check that also runs in
the browser before upload; the constants below are the shared contract and
are exported verbatim for the UI build to verify against.
"""

from __future__ import annotations

import io
import math
import struct
import wave
from dataclasses import dataclass

import numpy as np

from .errors import TooShort, UnsupportedFormat

FRAME_MS = 25
HOP_MS = 10
NOISE_PERCENTILE = 10
SPEECH_PERCENTILE = 90
NOISE_FLOOR = 1e-12
SNR_MIN_DB = 0.0
SNR_MAX_DB = 120.0
DEFAULT_THRESHOLD_DB = 15.0
MIN_DURATION_MS = 100
DEFAULT_SAMPLE_RATE = 16_000

SNR_CONSTANTS = {
    "frame_ms": FRAME_MS,
    "hop_ms": HOP_MS,
    "noise_percentile": NOISE_PERCENTILE,
    "speech_percentile": SPEECH_PERCENTILE,
    "noise_floor": NOISE_FLOOR,
    "snr_min_db": SNR_MIN_DB,
    "snr_max_db": SNR_MAX_DB,
    "threshold_db": DEFAULT_THRESHOLD_DB,
    "min_duration_ms": MIN_DURATION_MS,
    "sample_scale": 32768,
}


@dataclass(frozen=True)
class PcmClip:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        object.__setattr__(
            self, "samples", np.asarray(self.samples, dtype=np.float64)
        )
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        if self.samples.ndim != 1:
            raise ValueError("clip must be mono")
        if self.samples.size and float(np.max(np.abs(self.samples))) > 1.0:
            raise ValueError("samples must lie in [-1, 1]")

    @property
    def duration_ms(self) -> float:
        return 1000.0 * len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class SnrReport:
    snr_db: float
    noise_floor: float
    speech_level: float
    accepted: bool
    threshold_db: float

    def to_payload(self) -> dict:
        return {
            "snr_db": self.snr_db,
            "noise_floor": self.noise_floor,
            "speech_level": self.speech_level,
            "accepted": self.accepted,
            "threshold_db": self.threshold_db,
        }


def frame_energies(clip: PcmClip) -> np.ndarray:
    """Mean squared sample energy per 25 ms frame at a 10 ms hop.

    Sample counts round down; a final partial frame is dropped.
    """
    frame = clip.sample_rate * FRAME_MS // 1000
    hop = clip.sample_rate * HOP_MS // 1000
    n = len(clip.samples)
    if n < frame:
        raise TooShort(f"clip shorter than one {FRAME_MS} ms frame")
    count = (n - frame) // hop + 1
    energies = np.empty(count)
    for i in range(count):
        window = clip.samples[i * hop : i * hop + frame]
        energies[i] = float(np.mean(window * window))
    return energies


def nearest_rank(sorted_values: np.ndarray, percentile: float) -> float:
    """Classic nearest-rank percentile: value at rank ceil(p/100 * N)."""
    n = len(sorted_values)
    rank = max(1, math.ceil(percentile / 100.0 * n))
    return float(sorted_values[rank - 1])


def estimate_snr(clip: PcmClip, threshold_db: float = DEFAULT_THRESHOLD_DB) -> SnrReport:
    """Speech level over noise floor in dB, clamped to [0, 120].

    Noise floor is the 10th-percentile frame energy, speech level the 90th;
    the clip must be at least 100 ms long.
    """
    if clip.duration_ms < MIN_DURATION_MS:
        raise TooShort(f"clip must be at least {MIN_DURATION_MS} ms for gating")
    energies = np.sort(frame_energies(clip))
    noise = nearest_rank(energies, NOISE_PERCENTILE)
    speech = nearest_rank(energies, SPEECH_PERCENTILE)
    if speech <= 0.0:
        snr = SNR_MIN_DB
    else:
        snr = 10.0 * math.log10(speech / max(noise, NOISE_FLOOR))
    snr = min(SNR_MAX_DB, max(SNR_MIN_DB, snr))
    return SnrReport(
        snr_db=snr,
        noise_floor=noise,
        speech_level=speech,
        accepted=snr >= threshold_db,
        threshold_db=threshold_db,
    )


def decode_wav(data: bytes) -> PcmClip:
    """Parse RIFF WAV bytes; only 16-bit signed PCM mono is accepted."""
    try:
        with wave.open(io.BytesIO(data), "rb") as wav:
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            frames = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError) as exc:
        raise UnsupportedFormat(f"not a PCM WAV file: {exc}") from exc
    if channels != 1:
        raise UnsupportedFormat(f"expected mono audio, got {channels} channels")
    if width != 2:
        raise UnsupportedFormat(f"expected 16-bit PCM, got {8 * width}-bit")
    ints = np.frombuffer(frames, dtype="<i2")
    return PcmClip(samples=ints.astype(np.float64) / 32768.0, sample_rate=rate)


def encode_wav(clip: PcmClip) -> bytes:
    """16-bit PCM mono WAV bytes for a clip."""
    ints = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(clip.sample_rate)
        wav.writeframes(ints.tobytes())
    return buf.getvalue()
