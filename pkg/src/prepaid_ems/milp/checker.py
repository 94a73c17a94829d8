"""Independent feasibility verification of returned solutions."""

from dataclasses import dataclass

from prepaid_ems.milp.core import MilpModel, Solution


class MissingVariable(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    constraint: str
    residual: float


def check_feasibility(
    model: MilpModel, solution: Solution, tol: float = 1e-6
) -> list[Violation]:
    """Evaluate every constraint at the solution.

    Returns the constraints violated by more than ``tol``, with the
    violation amount; an empty list means feasible. Every declared
    variable must have a value.
    """
    values = solution.values
    missing = [v.name for v in model.variables if v.name not in values]
    if missing:
        raise MissingVariable(f"solution has no value for {missing[:5]}")
    violations = []
    for constraint in model.constraints:
        lhs = sum(c * values[name] for name, c in constraint.coeffs.items())
        if constraint.sense == "<=":
            residual = lhs - constraint.rhs
        elif constraint.sense == ">=":
            residual = constraint.rhs - lhs
        else:
            residual = abs(lhs - constraint.rhs)
        if residual > tol:
            violations.append(Violation(constraint.name, float(residual)))
    return violations
