"""Seeded discrete-time simulation worlds and scenario presets."""

from .base import (
    CompetitionLearner,
    TrusteeBehavior,
    WitnessBehavior,
    competition_update,
    derive_rng,
    distort_testimony,
    drift_provider,
    hon_x_split,
)
from .presets import PRESETS, build_world, list_presets

__all__ = [
    "CompetitionLearner",
    "TrusteeBehavior",
    "WitnessBehavior",
    "competition_update",
    "derive_rng",
    "distort_testimony",
    "drift_provider",
    "hon_x_split",
    "PRESETS",
    "build_world",
    "list_presets",
]
