#!/usr/bin/env python3
"""Independent SNR reference: pure-python, no numpy, no package imports.

Implements the shared gate definition from scratch (25 ms frames, 10 ms hop,
nearest-rank 10th/90th percentile energies, 10*log10 ratio clamped to
[0, 120] dB, 15 dB threshold) so the packaged implementation can be checked
against a second, unrelated code path.

Usage: snr_oracle.py clip.wav [clip2.wav ...]  -> JSON on stdout
"""

import json
import math
import struct
import sys
import wave

FRAME_MS = 25
HOP_MS = 10
THRESHOLD_DB = 15.0


def read_wav(path):
    with wave.open(path, "rb") as w:
        assert w.getnchannels() == 1, "oracle expects mono"
        assert w.getsampwidth() == 2, "oracle expects 16-bit PCM"
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    count = len(raw) // 2
    ints = struct.unpack("<%dh" % count, raw)
    return [v / 32768.0 for v in ints], rate


def frame_energies(samples, rate):
    frame = rate * FRAME_MS // 1000
    hop = rate * HOP_MS // 1000
    energies = []
    start = 0
    while start + frame <= len(samples):
        total = 0.0
        for v in samples[start : start + frame]:
            total += v * v
        energies.append(total / frame)
        start += hop
    return energies


def nearest_rank(sorted_values, percentile):
    rank = max(1, math.ceil(percentile / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


def snr_db(samples, rate):
    energies = sorted(frame_energies(samples, rate))
    noise = nearest_rank(energies, 10)
    speech = nearest_rank(energies, 90)
    if speech <= 0.0:
        value = 0.0
    else:
        value = 10.0 * math.log10(speech / max(noise, 1e-12))
    return min(120.0, max(0.0, value))


def main(argv):
    out = {}
    for path in argv[1:]:
        samples, rate = read_wav(path)
        value = snr_db(samples, rate)
        out[path.rsplit("/", 1)[-1]] = {
            "snr_db": value,
            "accepted": value >= THRESHOLD_DB,
            "threshold_db": THRESHOLD_DB,
        }
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
