import io
import json
import struct
import subprocess
import sys
import wave
from pathlib import Path

import numpy as np
import pytest

from speechadapt.audio_gate import (
    DEFAULT_THRESHOLD_DB,
    PcmClip,
    SNR_CONSTANTS,
    decode_wav,
    encode_wav,
    estimate_snr,
    frame_energies,
)
from speechadapt.errors import TooShort, UnsupportedFormat

ROOT = Path(__file__).resolve().parent.parent
GOLDEN_DIR = ROOT / "golden" / "snr"


class TestFrameEnergies:
    def test_constant_signal(self):
        clip = PcmClip(np.full(16_000, 0.5))
        energies = frame_energies(clip)
        assert np.allclose(energies, 0.25, atol=1e-15)
        # 1 s @ 16 kHz with 400-sample frames, 160-sample hop.
        assert len(energies) == (16_000 - 400) // 160 + 1

    def test_all_zero(self):
        clip = PcmClip(np.zeros(16_000))
        assert np.all(frame_energies(clip) == 0.0)

    def test_exactly_one_frame(self):
        clip = PcmClip(np.zeros(400))
        assert len(frame_energies(clip)) == 1

    def test_too_short(self):
        with pytest.raises(TooShort):
            frame_energies(PcmClip(np.zeros(399)))


class TestEstimateSnr:
    def test_constant_amplitude_rejected(self):
        report = estimate_snr(PcmClip(np.full(16_000, 0.5)))
        assert report.snr_db == 0.0 and not report.accepted
        assert report.noise_floor == report.speech_level

    def test_digital_silence_rejected(self):
        report = estimate_snr(PcmClip(np.zeros(16_000)))
        assert report.snr_db == 0.0 and not report.accepted

    def test_below_min_duration(self):
        with pytest.raises(TooShort):
            estimate_snr(PcmClip(np.zeros(1_500)))  # 93.75 ms

    def test_accepted_iff_above_threshold(self):
        rng = np.random.default_rng(1)
        quiet = rng.uniform(-0.004, 0.004, 8_000)
        loud = 0.5 * np.sin(2 * np.pi * 440 * np.arange(8_000) / 16_000)
        report = estimate_snr(PcmClip(np.concatenate([loud, quiet])))
        assert report.accepted == (report.snr_db >= report.threshold_db)
        assert report.accepted

    def test_scale_covariance(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            base = rng.normal(0.0, 0.05, 16_000)
            base[2000:6000] += 0.3 * np.sin(np.arange(4000) / 5.0)
            base = np.clip(base, -1, 1)
            a = estimate_snr(PcmClip(base))
            b = estimate_snr(PcmClip(base * 0.5))
            assert b.noise_floor == pytest.approx(a.noise_floor * 0.25, rel=1e-12)
            assert b.speech_level == pytest.approx(a.speech_level * 0.25, rel=1e-12)
            assert b.snr_db == pytest.approx(a.snr_db, abs=1e-9)

    def test_added_noise_never_raises_snr(self):
        rng = np.random.default_rng(11)
        speech = np.zeros(16_000)
        speech[3000:9000] = 0.4 * np.sin(2 * np.pi * 250 * np.arange(6000) / 16_000)
        previous = estimate_snr(PcmClip(speech)).snr_db
        for level in (0.002, 0.01, 0.05, 0.1):
            noisy = np.clip(speech + rng.normal(0.0, level, 16_000), -1, 1)
            current = estimate_snr(PcmClip(noisy)).snr_db
            assert current <= previous + 1e-9
            previous = current

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        samples = np.clip(rng.normal(0, 0.1, 16_000), -1, 1)
        a = estimate_snr(PcmClip(samples))
        b = estimate_snr(PcmClip(samples.copy()))
        assert a == b


class TestGoldenCorpus:
    def test_matches_frozen_oracle_values(self):
        golden = json.loads((GOLDEN_DIR / "golden.json").read_text())
        assert golden, "golden corpus missing"
        for name, expected in golden.items():
            clip = decode_wav((GOLDEN_DIR / name).read_bytes())
            report = estimate_snr(clip, threshold_db=expected["threshold_db"])
            assert report.snr_db == pytest.approx(expected["snr_db"], abs=1e-6), name
            assert report.accepted == expected["accepted"], name

    def test_matches_live_oracle_run(self):
        wavs = sorted(GOLDEN_DIR.glob("*.wav"))
        result = subprocess.run(
            [sys.executable, str(ROOT / "tools" / "snr_oracle.py")]
            + [str(p) for p in wavs],
            capture_output=True,
            text=True,
            check=True,
        )
        live = json.loads(result.stdout)
        for path in wavs:
            report = estimate_snr(decode_wav(path.read_bytes()))
            assert report.snr_db == pytest.approx(
                live[path.name]["snr_db"], abs=1e-6
            ), path.name


def make_wav_bytes(samples, rate=16_000, channels=1, width=2):
    ints = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    data = ints.tobytes() * channels
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(rate)
        w.writeframes(data)
    return buf.getvalue()


def make_float_wav(n=1000, rate=16_000):
    """RIFF container with IEEE-float (format 3) audio data."""
    data = struct.pack("<%df" % n, *([0.1] * n))
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        3,  # IEEE float
        1,
        rate,
        rate * 4,
        4,
        32,
        b"data",
        len(data),
    )
    return header + data


class TestWavCodec:
    def test_round_trip(self):
        rng = np.random.default_rng(5)
        samples = np.clip(rng.normal(0, 0.2, 4_000), -1, 1)
        clip = decode_wav(encode_wav(PcmClip(samples)))
        assert clip.sample_rate == 16_000
        assert np.max(np.abs(clip.samples - samples)) <= 1.0 / 32768.0

    def test_normalization_scale(self):
        buf = io.BytesIO()
        with wave.open(buf, "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(16_000)
            w.writeframes(struct.pack("<3h", -32768, 0, 16384))
        clip = decode_wav(buf.getvalue())
        assert clip.samples.tolist() == [-1.0, 0.0, 0.5]

    def test_rejects_stereo(self):
        with pytest.raises(UnsupportedFormat):
            decode_wav(make_wav_bytes(np.zeros(1_000), channels=2))

    def test_rejects_8_bit(self):
        buf = io.BytesIO()
        with wave.open(buf, "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(1)
            w.setframerate(16_000)
            w.writeframes(b"\x80" * 1000)
        with pytest.raises(UnsupportedFormat):
            decode_wav(buf.getvalue())

    def test_rejects_float_pcm(self):
        with pytest.raises(UnsupportedFormat):
            decode_wav(make_float_wav())

    def test_rejects_garbage(self):
        with pytest.raises(UnsupportedFormat):
            decode_wav(b"not audio at all")


def test_constants_exported_for_ui_contract():
    assert SNR_CONSTANTS["frame_ms"] == 25
    assert SNR_CONSTANTS["hop_ms"] == 10
    assert SNR_CONSTANTS["threshold_db"] == DEFAULT_THRESHOLD_DB
    assert SNR_CONSTANTS["sample_scale"] == 32768


def test_constants_file_matches_module():
    frozen = json.loads((GOLDEN_DIR / "constants.json").read_text())
    assert frozen == SNR_CONSTANTS
