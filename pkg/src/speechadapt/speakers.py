"""Synthetic speaker construction and serialization.

A speaker spec names how many phonemes are impaired and how severely; the
factory turns that into a concrete ground-truth confusion channel with
seeded difficult-phoneme and confusion-target choices.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import BadSpec
from .phonemes import PhonemeInventory
from .recognizer import ConfusionMatrix, SpeakerProfile, derive_rng

REGULAR_DIAGONAL = 0.98
REGULAR_DELETION = 0.01
_SPEAKER_SALT = 0x53504B52


def make_speaker(spec: Mapping, inventory: PhonemeInventory) -> SpeakerProfile:
    """Speaker with ``n_difficult`` impaired phonemes at the given severity.

    Difficult rows move ``severity`` probability mass off the diagonal onto
    one or two seeded confusion targets. The difficult phonemes form a
    seeded confusion cycle (each collapses into the next), modeling an
    articulatory family whose members shift into each other while staying
    acoustically distinguishable once the shift is known; a lone difficult
    phoneme falls back to one or two arbitrary targets. Remaining rows keep
    a 0.98 diagonal. Deletion rates are severity/5 for difficult phonemes
    and 0.01 otherwise.
    """
    try:
        n_difficult = int(spec["n_difficult"])
        severity = float(spec["severity"])
        seed = int(spec["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BadSpec(f"speaker spec needs n_difficult, severity, seed: {exc}") from None
    p = len(inventory)
    if not 0 <= n_difficult <= p:
        raise BadSpec(f"n_difficult must lie in [0, {p}]")
    if not 0.0 <= severity < 1.0:
        raise BadSpec("severity must lie in [0, 1)")

    rng = derive_rng(seed, _SPEAKER_SALT)
    difficult = sorted(rng.choice(p, size=n_difficult, replace=False).tolist())

    rows = np.full((p, p), (1.0 - REGULAR_DIAGONAL) / max(p - 1, 1))
    np.fill_diagonal(rows, REGULAR_DIAGONAL if p > 1 else 1.0)
    deletion = np.full(p, REGULAR_DELETION)
    if n_difficult >= 2:
        cycle = [difficult[int(i)] for i in rng.permutation(n_difficult)]
        targets = {cycle[k]: [cycle[(k + 1) % n_difficult]] for k in range(n_difficult)}
    else:
        targets = {}
        for i in difficult:
            pool = [q for q in range(p) if q != i]
            if pool:
                picks = rng.choice(len(pool), size=min(2, len(pool)), replace=False)
                targets[i] = [pool[int(k)] for k in picks]
    for i in difficult:
        chosen = targets.get(i, [])
        if not chosen:  # single-phoneme inventory: nothing to confuse into
            deletion[i] = severity / 5.0
            continue
        row = np.zeros(p)
        row[i] = 1.0 - severity
        if len(chosen) == 1:
            row[chosen[0]] = severity
        else:
            row[chosen[0]] = severity * 2.0 / 3.0
            row[chosen[1]] = severity / 3.0
        rows[i] = row
        deletion[i] = severity / 5.0
    return SpeakerProfile(
        c_true=ConfusionMatrix(inventory, rows),
        deletion_rate=deletion,
        seed=seed,
    )


def speaker_to_payload(speaker: SpeakerProfile) -> dict:
    return {
        "inventory": list(speaker.inventory.symbols),
        "rows": speaker.c_true.rows.tolist(),
        "deletion_rate": speaker.deletion_rate.tolist(),
        "seed": speaker.seed,
    }


def speaker_from_payload(payload: Mapping) -> SpeakerProfile:
    inventory = PhonemeInventory(payload["inventory"])
    return SpeakerProfile(
        c_true=ConfusionMatrix(inventory, np.array(payload["rows"])),
        deletion_rate=np.array(payload["deletion_rate"]),
        seed=int(payload["seed"]),
    )


def save_speaker(speaker: SpeakerProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(speaker_to_payload(speaker), indent=2), encoding="utf-8")


def load_speaker(path: str | Path) -> SpeakerProfile:
    return speaker_from_payload(json.loads(Path(path).read_text(encoding="utf-8")))
