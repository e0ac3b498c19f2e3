#!/usr/bin/env python3
"""Generate the versioned standard campaign fixture.

Builds a 200-word lexicon over a 20-phoneme inventory plus the campaign
constants JSON, then (with --calibrate) runs both strategies over a few
seeds and reports the acceptance-property margins. Run once, inspect, and
commit the outputs under src/speechadapt/fixtures/.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = ROOT / "src" / "speechadapt" / "fixtures"

INVENTORY = [
    "aa", "ae", "b", "d", "ee", "f", "g", "k", "l", "m",
    "n", "oo", "p", "r", "s", "t", "uu", "v", "z", "sh",
]
GENERATOR_SEED = 74520250
N_WORDS = 200
LENGTHS = (4, 5, 6)


def build_lexicon_lines():
    """Minimal-pair clusters: words sharing a frame, varying at one position.

    The variable slot of each cluster cycles through several phonemes, so a
    confused rendering of one member usually collides with a sibling. That
    makes the fresh decoder genuinely error-prone while staying resolvable
    once the confusion channel is learned.
    """
    rng = np.random.default_rng(GENERATOR_SEED)
    p = len(INVENTORY)
    lines = []
    seen = set()
    while len(lines) < N_WORDS:
        length = int(rng.choice(LENGTHS))
        frame = [INVENTORY[i] for i in rng.choice(p, size=length)]
        slot = int(rng.integers(0, length))
        n_variants = int(rng.integers(8, 17))
        variant_symbols = rng.choice(p, size=min(n_variants, p), replace=False)
        for symbol_id in variant_symbols:
            if len(lines) >= N_WORDS:
                break
            pron = list(frame)
            pron[slot] = INVENTORY[int(symbol_id)]
            word = "".join(pron)
            if word in seen:
                continue
            seen.add(word)
            lines.append(f"{word}\t{' '.join(pron)}")
    return sorted(lines)


def write_fixture(lines):
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    (FIXTURE_DIR / "standard_lexicon.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    fixture = {
        "name": "standard-campaign-v1",
        "lexicon_ref": "standard_lexicon.tsv",
        "speaker_spec": {"n_difficult": 5, "severity": 0.8},
        "rounds": 15,
        "prompts_per_round": 10,
        "words_per_prompt": 3,
        "cold_start_budget": 8,
        "cold_start_chunk": 8,
        "eval_size": 100,
        "eval_renders": 5,
        "passes": 10,
        "top_k": 5,
        "thresholds": [0.15, 0.30],
        "prior_self": 25.0,
        "prior_other": 0.1,
        "correction_policy": "oracle_all",
        "wer_target_ratio": 0.5,
        "seeds": list(range(20)),
    }
    (FIXTURE_DIR / "standard_campaign.json").write_text(
        json.dumps(fixture, indent=2) + "\n", encoding="utf-8"
    )
    return fixture


def calibrate(n_seeds):
    from speechadapt.curriculum import Strategy
    from speechadapt.phonemes import align_sequences, phonemes_of, Lexicon
    from speechadapt.sim.campaign import Campaign, compare_results, run_campaign

    fixture = json.loads((FIXTURE_DIR / "standard_campaign.json").read_text())
    seeds = list(range(n_seeds))
    t0 = time.time()
    unc = run_campaign(Campaign.from_fixture(fixture, Strategy.UNCERTAINTY, seeds, FIXTURE_DIR))
    t1 = time.time()
    rnd = run_campaign(Campaign.from_fixture(fixture, Strategy.RANDOM, seeds, FIXTURE_DIR))
    t2 = time.time()

    med_u = unc.median_curve()
    med_r = rnd.median_curve()
    print(f"uncertainty run: {t1-t0:.1f}s, random run: {t2-t1:.1f}s")
    print("median curve (uncertainty):", [round(x, 3) for x in med_u])
    print("median curve (random):     ", [round(x, 3) for x in med_r])
    print(f"(a) final {med_u[-1]:.3f} < 0.5 x round0 {med_u[0]:.3f}? "
          f"{med_u[-1] < 0.5 * med_u[0]}")
    steps = [med_u[i + 1] - med_u[i] for i in range(len(med_u) - 1)]
    print(f"(c) max median step: {max(steps):.4f} (tolerance +0.02)")
    comparison = compare_results(unc, rnd)
    print(f"(b) wins {comparison['wins']} losses {comparison['losses']} "
          f"ties {comparison['ties']} p={comparison['p_value']:.4f}")

    lex = Lexicon.from_file(FIXTURE_DIR / "standard_lexicon.tsv")
    errors = plausible = 0
    for r in unc.seed_results:
        for ref, hyp in r.final_eval_pairs:
            if ref == hyp:
                continue
            errors += 1
            d = align_sequences(phonemes_of(ref, lex), phonemes_of(hyp, lex)).distance
            plausible += d <= 2
    frac = plausible / errors if errors else 1.0
    print(f"plausibility: {plausible}/{errors} residual errors within distance 2 "
          f"({frac:.1%}); final WER medians u={med_u[-1]:.3f} r={med_r[-1]:.3f}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--calibrate", type=int, default=0, metavar="N_SEEDS")
    parser.add_argument("--skip-write", action="store_true")
    args = parser.parse_args()
    if not args.skip_write:
        lines = build_lexicon_lines()
        fixture = write_fixture(lines)
        print(f"wrote {len(lines)} words and {fixture['name']}")
    if args.calibrate:
        calibrate(args.calibrate)


if __name__ == "__main__":
    sys.exit(main())
