"""Solver-agnostic MILP machinery.

Builders translate rationing problems into a plain variable/constraint
representation; desk-scale exact backends solve the small cases
in-process; an LP-file writer and subprocess bridge hand bigger
instances to any external solver; an independent checker verifies that
whatever came back actually satisfies the constraints.
"""

from prepaid_ems.milp.builders import (
    InfeasibleConstants,
    build_dfm,
    build_obm,
    extract_schedule,
    extract_thresholds,
)
from prepaid_ems.milp.checker import MissingVariable, Violation, check_feasibility
from prepaid_ems.milp.core import (
    Constraint,
    MilpConstants,
    MilpModel,
    Solution,
    SolveStatus,
    Variable,
    default_constants,
)
from prepaid_ems.milp.grid_search import InstanceTooLarge, solve_dfm_grid
from prepaid_ems.milp.knapsack import StructureMismatch, solve_knapsack_bb
from prepaid_ems.milp.lp_io import (
    SolutionParseError,
    SolverNotFound,
    SolverTimeout,
    solve_external,
    write_lp,
)

__all__ = [
    "Constraint",
    "InfeasibleConstants",
    "InstanceTooLarge",
    "MilpConstants",
    "MilpModel",
    "MissingVariable",
    "Solution",
    "SolutionParseError",
    "SolveStatus",
    "SolverNotFound",
    "SolverTimeout",
    "StructureMismatch",
    "Variable",
    "Violation",
    "build_dfm",
    "build_obm",
    "check_feasibility",
    "default_constants",
    "extract_schedule",
    "extract_thresholds",
    "solve_dfm_grid",
    "solve_external",
    "solve_knapsack_bb",
    "write_lp",
]
