"""Quantum discord and work deficit under constrained local measurements."""
from .correlations import (
    CorrelationEval,
    Evaluator,
    RefineSettings,
    constrained_min,
    discord_given_basis,
    reference_min,
    voluntary_error,
    workdeficit_given_basis,
)
from .errors import QCorrError
from .measurements import EarmarkedSet, MeasurementBasis, build_set, triad
from .states import BipartiteDensityMatrix

__version__ = "0.1.0"

__all__ = [
    "BipartiteDensityMatrix",
    "CorrelationEval",
    "EarmarkedSet",
    "Evaluator",
    "MeasurementBasis",
    "QCorrError",
    "RefineSettings",
    "build_set",
    "constrained_min",
    "discord_given_basis",
    "reference_min",
    "triad",
    "voluntary_error",
    "workdeficit_given_basis",
]
