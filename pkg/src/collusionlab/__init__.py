"""Coalitional manipulability of positional scoring rules on scoring profiles."""

__version__ = "0.1.0"

from .core import (
    CollusionLabError,
    InvalidK,
    MissingReference,
    OutOfRegime,
    PreconditionViolated,
    Rule,
    RuleKind,
    ScoringProfile,
    TieBreak,
    TooLarge,
    Unsupported,
    WrongRule,
    tally,
    winner,
)
from .oracle import Budget, OracleVerdict, Status, Witness, collusion_oracle
from .classify import Classification, classify
from .count import BoundId, BoundSpec, bound_value, count_scoring_profiles
from .sample import RngStream, sample_ic, sample_isc, spawn_stream
from .estimate import ExperimentConfig, estimate_fraction, exhaustive_fraction, sweep

__all__ = [
    "__version__", "CollusionLabError", "InvalidK", "MissingReference", "OutOfRegime",
    "PreconditionViolated", "Rule", "RuleKind", "ScoringProfile", "TieBreak", "TooLarge",
    "Unsupported", "WrongRule", "tally", "winner", "Budget", "OracleVerdict", "Status",
    "Witness", "collusion_oracle", "Classification", "classify", "BoundId", "BoundSpec",
    "bound_value", "count_scoring_profiles", "RngStream", "sample_ic", "sample_isc",
    "spawn_stream", "ExperimentConfig", "estimate_fraction", "exhaustive_fraction", "sweep",
]
