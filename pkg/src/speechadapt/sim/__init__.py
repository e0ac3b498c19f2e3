"""Headless lifecycle simulator and benchmark CLI."""

from .campaign import (
    Campaign,
    CampaignResult,
    CurvePoint,
    SeedResult,
    compare_results,
    export_curves,
    load_curves,
    load_fixture,
    run_campaign,
    run_seed,
)

__all__ = [
    "Campaign",
    "CampaignResult",
    "CurvePoint",
    "SeedResult",
    "compare_results",
    "export_curves",
    "load_curves",
    "load_fixture",
    "run_campaign",
    "run_seed",
]
