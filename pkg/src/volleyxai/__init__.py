"""Match-outcome prediction for a volleyball league with white-box models
and post-hoc explanations (Kernel SHAP, ProtoDash)."""

from .data import LeagueConfig, RawMatch, Stage, chronological_split, generate_synthetic_league, parse_matches_csv
from .features import FEATURE_NAMES, build_features
from .pipeline import RunConfig, explain_match, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES",
    "LeagueConfig",
    "RawMatch",
    "RunConfig",
    "Stage",
    "build_features",
    "chronological_split",
    "explain_match",
    "generate_synthetic_league",
    "parse_matches_csv",
    "run_pipeline",
]
