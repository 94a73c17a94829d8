"""Desk-scale threshold search: an oracle/fallback backend for the
detailed-forecast model when no external MILP solver is available.

Thresholds are searched over a finite candidate grid per load-day and
every combination is scored by actually simulating it against the
forecast series, so the returned plan is optimal within its candidate
set under the true simulator semantics (not a proven MILP optimum).
The combination count is exponential in loads x days; a hard cap keeps
this honest about the instance sizes it can handle.
"""

import itertools

import numpy as np

from prepaid_ems import sim
from prepaid_ems.afg import ThresholdPlan
from prepaid_ems.milp.core import MilpConstants, Solution, SolveStatus, default_constants
from prepaid_ems.model import Budget, DemandSeries, LoadSet, Tariff, daily_average


class InstanceTooLarge(ValueError):
    pass


def solve_dfm_grid(
    demand: DemandSeries,
    loads: LoadSet,
    tariff: Tariff,
    budget: Budget,
    constants: MilpConstants | None = None,
    grid_resolution: int = 3,
    candidate_cap: int = 20000,
) -> tuple[ThresholdPlan, Solution]:
    """Best threshold plan over a per-load-day candidate grid.

    Candidates per load-day: zero, ``grid_resolution`` evenly spaced
    points up to the daily recharge, and just-above-the-recharge (which
    pins the load off). Load-days with no forecast demand only get the
    pinned-off candidate -- their threshold cannot matter. Ties keep the
    first combination in enumeration order, so results are
    deterministic.
    """
    if grid_resolution < 1:
        raise ValueError(f"grid_resolution must be >= 1, got {grid_resolution}")
    if constants is None:
        constants = default_constants(demand, tariff, budget)
    grid = demand.grid
    num_loads = demand.num_loads
    num_days = grid.num_days
    recharge = budget.initial_balance / num_days
    recharges = np.full(num_days, recharge)

    avg = daily_average(demand)
    pinned_off = recharge + constants.indicator_eps
    active = [recharge * (i + 1) / grid_resolution for i in range(grid_resolution)]
    candidates: list[list[float]] = []
    cells: list[tuple[int, int]] = []
    count = 1
    for k in range(num_loads):
        for day in range(num_days):
            cell = [0.0, *active, pinned_off] if avg.power[k, day] > 0 else [pinned_off]
            cells.append((k, day))
            candidates.append(cell)
            count *= len(cell)
            if count > candidate_cap:
                raise InstanceTooLarge(
                    f"threshold grid has more than {candidate_cap} combinations "
                    f"({num_loads} loads x {num_days} days at resolution "
                    f"{grid_resolution})"
                )

    best_psf = -np.inf
    best_thresholds = None
    thresholds = np.zeros((num_loads, num_days))
    for combo in itertools.product(*candidates):
        for (k, day), value in zip(cells, combo):
            thresholds[k, day] = value
        plan = ThresholdPlan(thresholds, recharges, latching=False)
        result = sim.simulate_thresholds(plan, demand, loads, tariff, budget)
        if result.psf > best_psf:
            best_psf = result.psf
            best_thresholds = thresholds.copy()

    best_plan = ThresholdPlan(best_thresholds, recharges, latching=False)
    values = {
        f"thr_k{k}_d{day}": best_thresholds[k, day]
        for k in range(num_loads)
        for day in range(num_days)
    }
    return best_plan, Solution(values, float(best_psf), SolveStatus.FEASIBLE)
