#!/usr/bin/env python3
"""Generate the shared SNR golden corpus under golden/snr/.

Deterministic synthetic WAVs plus golden.json with oracle-computed SNR
values; both the Python gate tests and the UI gate tests consume these
files. Run once and commit the output.
"""

import json
import math
import struct
import subprocess
import sys
import wave
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "golden" / "snr"


def write_wav(path, samples, rate=16_000):
    ints = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(ints.tobytes())


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20250809)
    rate = 16_000
    one_sec = np.arange(rate) / rate

    clips = {}
    clips["constant_half.wav"] = (np.full(rate, 0.5), rate)
    clips["silence.wav"] = (np.zeros(rate), rate)

    # First half 440 Hz sine at 0.5, second half uniform noise at 0.005.
    sine = 0.5 * np.sin(2 * math.pi * 440.0 * one_sec[: rate // 2])
    noise = rng.uniform(-0.005, 0.005, rate // 2)
    clips["sine_then_noise.wav"] = (np.concatenate([sine, noise]), rate)

    # Speech-like bursts over a quiet floor: clearly accepted.
    floor = rng.normal(0.0, 0.002, 2 * rate)
    burst = floor.copy()
    for start in (3000, 11000, 20000, 27000):
        t = np.arange(4000) / rate
        burst[start : start + 4000] += 0.4 * np.sin(2 * math.pi * 220 * t) * np.hanning(4000)
    clips["bursts_over_floor.wav"] = (np.clip(burst, -1, 1), rate)

    # Weak speech barely above the noise: rejected at 15 dB.
    weak = rng.normal(0.0, 0.01, rate)
    weak[4000:8000] += 0.02 * np.sin(2 * math.pi * 330 * one_sec[:4000])
    clips["weak_speech.wav"] = (np.clip(weak, -1, 1), rate)

    # Stationary gaussian noise: percentiles nearly equal, rejected.
    clips["stationary_noise.wav"] = (np.clip(rng.normal(0.0, 0.1, rate), -1, 1), rate)

    # 150 ms minimal-length clip with a loud middle.
    short = rng.normal(0.0, 0.001, int(0.15 * rate))
    short[800:1600] += 0.5 * np.sin(2 * math.pi * 440 * np.arange(800) / rate)
    clips["short_ok.wav"] = (np.clip(short, -1, 1), rate)

    # 8 kHz sample-rate variant to exercise framing arithmetic.
    t8 = np.arange(8000) / 8000
    mix8 = 0.3 * np.sin(2 * math.pi * 200 * t8)
    mix8[: len(mix8) // 2] = rng.uniform(-0.004, 0.004, len(mix8) // 2)
    clips["tone_8khz.wav"] = (mix8, 8000)

    for name, (samples, sr) in clips.items():
        write_wav(OUT / name, samples, sr)

    oracle = ROOT / "tools" / "snr_oracle.py"
    paths = [str(OUT / name) for name in sorted(clips)]
    result = subprocess.run(
        [sys.executable, str(oracle)] + paths, capture_output=True, text=True, check=True
    )
    (OUT / "golden.json").write_text(result.stdout, encoding="utf-8")

    # Versioned gate-constants contract shared with the UI build.
    from speechadapt.audio_gate import SNR_CONSTANTS

    (OUT / "constants.json").write_text(
        json.dumps(SNR_CONSTANTS, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(result.stdout)


if __name__ == "__main__":
    main()
