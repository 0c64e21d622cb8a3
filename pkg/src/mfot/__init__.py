"""Symmetric many-body optimal transport with pair costs and its mean-field limit."""
from .costs import CostFunction, make_cost, parse_cost
from .measures import DiscreteMeasure, NBodyMeasure, PairMeasure, SupportGrid, marginal, tv_distance
from .mmot import MmotProblem, SolveReport, mean_field_value, solve_mmot, solve_reduced

__version__ = "0.1.0"

__all__ = [
    "CostFunction",
    "DiscreteMeasure",
    "MmotProblem",
    "NBodyMeasure",
    "PairMeasure",
    "SolveReport",
    "SupportGrid",
    "make_cost",
    "marginal",
    "mean_field_value",
    "parse_cost",
    "solve_mmot",
    "solve_reduced",
    "tv_distance",
]
