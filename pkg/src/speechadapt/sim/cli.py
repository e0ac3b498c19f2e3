"""Campaign simulator command line.

    speechadapt-sim run --fixture f.json --strategy uncertainty --seeds 20 --out curves.csv
    speechadapt-sim compare --a uncertainty.csv --b random.csv --report report.txt
    speechadapt-sim speaker --spec spec.json --out speaker.json

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..curriculum import Strategy
from ..errors import SpeechAdaptError
from ..phonemes import PhonemeInventory
from ..speakers import make_speaker, save_speaker
from .campaign import (
    Campaign,
    CurvePoint,
    export_curves,
    load_curves,
    load_fixture,
    run_campaign,
    sign_test_p_value,
)

STRATEGY_NAMES = {
    "uncertainty": Strategy.UNCERTAINTY,
    "random": Strategy.RANDOM,
    "coverage": Strategy.COVERAGE_ONLY,
}


def _cmd_run(args) -> int:
    fixture = load_fixture(args.fixture)
    strategy = STRATEGY_NAMES[args.strategy]
    seeds = list(range(args.seeds)) if args.seeds else list(fixture.get("seeds", range(20)))
    campaign = Campaign.from_fixture(
        fixture, strategy, seeds, base_dir=Path(args.fixture).resolve().parent
    )
    result = run_campaign(campaign)
    export_curves(result.curves, args.out)
    medians = result.median_curve()
    print(f"{len(seeds)} seeds x {campaign.rounds} rounds ({args.strategy})")
    print(f"median WER round 0: {medians[0]:.3f}  final: {medians[-1]:.3f}")
    print(f"curves written to {args.out}")
    return 0


def _rounds_to_target(points: list[CurvePoint], target: float) -> float:
    for p in points:
        if p.wer_eval <= target:
            return p.round
    return float("inf")


def _cmd_compare(args) -> int:
    a = load_curves(args.a)
    b = load_curves(args.b)
    by_seed_a: dict[int, list[CurvePoint]] = {}
    by_seed_b: dict[int, list[CurvePoint]] = {}
    for p in a:
        by_seed_a.setdefault(p.seed, []).append(p)
    for p in b:
        by_seed_b.setdefault(p.seed, []).append(p)
    seeds = sorted(set(by_seed_a) & set(by_seed_b))
    if not seeds:
        print("no common seeds between the two curve files", file=sys.stderr)
        return 1
    wins = losses = ties = 0
    lines = [
        f"comparison of {args.a} (A) vs {args.b} (B)",
        f"common seeds: {len(seeds)}",
        "",
        "seed  target  rounds_A  rounds_B",
    ]
    for seed in seeds:
        pa = sorted(by_seed_a[seed], key=lambda p: p.round)
        pb = sorted(by_seed_b[seed], key=lambda p: p.round)
        target = args.target_ratio * max(pa[0].wer_eval, pb[0].wer_eval)
        ra, rb = _rounds_to_target(pa, target), _rounds_to_target(pb, target)
        if ra < rb:
            wins += 1
        elif ra > rb:
            losses += 1
        else:
            ties += 1
        lines.append(f"{seed:>4}  {target:.3f}  {ra:>8}  {rb:>8}")
    p_value = sign_test_p_value(wins, losses)
    auc_a = float(np.mean([np.trapezoid([p.wer_eval for p in sorted(by_seed_a[s], key=lambda p: p.round)]) for s in seeds]))
    auc_b = float(np.mean([np.trapezoid([p.wer_eval for p in sorted(by_seed_b[s], key=lambda p: p.round)]) for s in seeds]))
    lines += [
        "",
        f"A wins {wins}, loses {losses}, ties {ties}",
        f"sign test p = {p_value:.5f}",
        f"mean AUC: A {auc_a:.3f}  B {auc_b:.3f}",
    ]
    report = "\n".join(lines) + "\n"
    Path(args.report).write_text(report, encoding="utf-8")
    print(report)
    return 0


def _cmd_speaker(args) -> int:
    spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    inventory = PhonemeInventory(spec["inventory"])
    speaker = make_speaker(spec, inventory)
    save_speaker(speaker, args.out)
    print(f"speaker written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speechadapt-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a campaign and export learning curves")
    run.add_argument("--fixture", required=True)
    run.add_argument("--strategy", choices=sorted(STRATEGY_NAMES), required=True)
    run.add_argument("--seeds", type=int, default=0, help="number of seeds (0 = fixture default)")
    run.add_argument("--out", required=True)
    run.set_defaults(func=_cmd_run)

    compare = sub.add_parser("compare", help="paired-seed comparison of two curve files")
    compare.add_argument("--a", required=True)
    compare.add_argument("--b", required=True)
    compare.add_argument("--report", required=True)
    compare.add_argument("--target-ratio", type=float, default=0.6)
    compare.set_defaults(func=_cmd_compare)

    speaker = sub.add_parser("speaker", help="build a synthetic speaker from a spec")
    speaker.add_argument("--spec", required=True)
    speaker.add_argument("--out", required=True)
    speaker.set_defaults(func=_cmd_speaker)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (SpeechAdaptError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
