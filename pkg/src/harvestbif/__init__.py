"""Global bifurcation structure of a one-dimensional diffusive logistic equation
with harvesting, computed on a uniform finite-difference grid."""
from __future__ import annotations

from .continuation import (Branch, FoldCurve, FoldPoint, StepConfig, continue_in_c,
                           count_solutions_at, locate_fold, positive_branch_u_dagger,
                           trace_branch, track_folds_in_a)
from .grid import Grid, make_grid
from .lambda1 import LambdaSet, build_lambda_set
from .model import CompetitionTerm, ConfigurationError, Problem, make_problem
from .solver import Solution, SolverConfig, newton_solve

__version__ = "0.1.0"

__all__ = [
    "Branch", "CompetitionTerm", "ConfigurationError", "FoldCurve", "FoldPoint", "Grid",
    "LambdaSet", "Problem", "Solution", "SolverConfig", "StepConfig", "build_lambda_set",
    "continue_in_c", "count_solutions_at", "locate_fold", "make_grid", "make_problem",
    "newton_solve", "positive_branch_u_dagger", "trace_branch", "track_folds_in_a",
]
