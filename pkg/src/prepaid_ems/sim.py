"""Discrete-time wallet simulator.

This is the ground truth every policy is judged against: step through
the horizon, serve whatever the policy's enable rules allow, pay for
the served energy, and disconnect permanently once the prepaid balance
is gone.

Semantics shared by all entry points:

* balances are checked at the start of a step, before that step's
  energy is paid for; a step that overdraws the wallet is still served
  if the balance was positive when it began (one-step overshoot)
* a load is only ever served where it actually has demand
* once the real balance is <= 0 at a step start, everything stays off
  for the rest of the horizon (prepaid disconnection, no reconnection)

Balance traces record start-of-step values, matching the convention
used by the threshold optimizer's wallet variables; the end-of-horizon
balances are carried separately.
"""

from dataclasses import dataclass

import numpy as np

from prepaid_ems.afg import ThresholdPlan
from prepaid_ems.model import (
    Budget,
    DemandSeries,
    LoadSet,
    Tariff,
    TimeGrid,
    demand_indicator,
    psf,
)


class PlanShapeMismatch(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SimResult:
    """Outcome of one simulation run."""

    actuation: np.ndarray  # [load, timestep], 0/1
    real_balance_trace: np.ndarray  # start-of-step, $
    virtual_balance_trace: np.ndarray | None  # start-of-step, $; None without a virtual wallet
    final_real_balance: float
    final_virtual_balance: float | None
    sf: np.ndarray  # per-load service factor, NaN where never demanded
    psf: float
    total_spend: float
    disconnection_days: int
    first_disconnect_step: int | None


def count_disconnection_days(real_balance_trace: np.ndarray, grid: TimeGrid) -> int:
    """Whole calendar days with a non-positive balance at every step."""
    trace = np.asarray(real_balance_trace, dtype=float)
    if trace.shape != (grid.total_steps,):
        raise ShapeMismatch(
            f"trace has {trace.shape[0] if trace.ndim == 1 else trace.shape} "
            f"entries, grid has {grid.total_steps} steps"
        )
    days = trace.reshape(grid.num_days, grid.steps_per_day)
    return int((days <= 0).all(axis=1).sum())


def _finalize(
    truth: DemandSeries,
    loads: LoadSet,
    budget: Budget,
    actuation: np.ndarray,
    z_trace: np.ndarray,
    x_trace: np.ndarray | None,
    final_real: float,
    final_virtual: float | None,
    total_spend: float,
) -> SimResult:
    sf, value = psf(actuation, demand_indicator(truth), loads)
    below = np.flatnonzero(z_trace <= 0)
    first_disconnect = int(below[0]) if below.size else None
    actuation.setflags(write=False)
    z_trace.setflags(write=False)
    if x_trace is not None:
        x_trace.setflags(write=False)
    return SimResult(
        actuation=actuation,
        real_balance_trace=z_trace,
        virtual_balance_trace=x_trace,
        final_real_balance=final_real,
        final_virtual_balance=final_virtual,
        sf=sf,
        psf=value,
        total_spend=total_spend,
        disconnection_days=count_disconnection_days(z_trace, truth.grid),
        first_disconnect_step=first_disconnect,
    )


def simulate_thresholds(
    plan: ThresholdPlan,
    truth: DemandSeries,
    loads: LoadSet,
    tariff: Tariff,
    budget: Budget,
) -> SimResult:
    """Run a threshold plan against true demand.

    The virtual wallet starts empty and receives the day's recharge at
    each day start. A load is enabled at a step iff the virtual balance
    is at or above its threshold for the day (and, for latching plans,
    it has not already been disabled that day) and the real wallet is
    still positive. Both wallets pay for every served step.
    """
    num_loads, total = truth.power.shape
    grid = truth.grid
    if plan.thresholds.shape[0] != num_loads or plan.thresholds.shape[0] != len(loads):
        raise PlanShapeMismatch(
            f"plan covers {plan.thresholds.shape[0]} loads, expected {len(loads)}"
        )
    if plan.num_days != grid.num_days:
        raise PlanShapeMismatch(
            f"plan covers {plan.num_days} days, the horizon has {grid.num_days}"
        )

    cost_factor = tariff.alpha * grid.step_hours
    real = budget.initial_balance
    virtual = 0.0
    spend = 0.0
    disconnected = False
    actuation = np.zeros((num_loads, total), dtype=np.int8)
    z_trace = np.empty(total)
    x_trace = np.empty(total)
    eligible = np.ones(num_loads, dtype=bool)

    for t in range(total):
        day = grid.day_of(t)
        if t % grid.steps_per_day == 0:
            virtual += plan.recharges[day]
            eligible[:] = True
        z_trace[t] = real
        x_trace[t] = virtual
        if real <= 0:
            disconnected = True
        if disconnected:
            continue
        meets = virtual >= plan.thresholds[:, day]
        if plan.latching:
            eligible &= meets
            enabled = eligible
        else:
            enabled = meets
        served = enabled & (truth.power[:, t] > 0)
        if served.any():
            actuation[served, t] = 1
            cost = cost_factor * float(truth.power[served, t].sum())
            real -= cost
            virtual -= cost
            spend += cost
    return _finalize(
        truth, loads, budget, actuation, z_trace, x_trace, real, virtual, spend
    )


def simulate_schedule(
    schedule: np.ndarray,
    truth: DemandSeries,
    loads: LoadSet,
    tariff: Tariff,
    budget: Budget,
) -> SimResult:
    """Run a fixed on/off schedule against true demand.

    A scheduled step is served only where demand actually occurs, and
    only while the prepaid wallet holds out; a schedule computed from a
    wrong forecast simply burns its budget at the wrong times.
    """
    sched = np.asarray(schedule)
    if sched.shape != truth.power.shape:
        raise ShapeMismatch(
            f"schedule shape {sched.shape} != demand shape {truth.power.shape}"
        )
    if not np.isin(sched, (0, 1)).all():
        raise ShapeMismatch("schedule must be a binary matrix")

    grid = truth.grid
    num_loads, total = truth.power.shape
    cost_factor = tariff.alpha * grid.step_hours
    real = budget.initial_balance
    spend = 0.0
    disconnected = False
    actuation = np.zeros((num_loads, total), dtype=np.int8)
    z_trace = np.empty(total)

    for t in range(total):
        z_trace[t] = real
        if real <= 0:
            disconnected = True
        if disconnected:
            continue
        served = (sched[:, t] == 1) & (truth.power[:, t] > 0)
        if served.any():
            actuation[served, t] = 1
            cost = cost_factor * float(truth.power[served, t].sum())
            real -= cost
            spend += cost
    return _finalize(truth, loads, budget, actuation, z_trace, None, real, None, spend)


def simulate_baseline(
    truth: DemandSeries, loads: LoadSet, tariff: Tariff, budget: Budget
) -> SimResult:
    """Unrationed use: serve all demand until the wallet is empty."""
    if truth.num_loads != len(loads):
        raise ShapeMismatch(
            f"series has {truth.num_loads} loads, load set has {len(loads)}"
        )
    return simulate_schedule(
        np.ones_like(truth.power, dtype=np.int8), truth, loads, tariff, budget
    )


def write_trace_csv(result: SimResult, loads: LoadSet, path) -> None:
    """Per-step trace: balances and per-load actuation."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "real_balance", "virtual_balance", *(f"a_{n}" for n in loads.names)]
        )
        virtual = result.virtual_balance_trace
        for t in range(result.actuation.shape[1]):
            writer.writerow(
                [
                    t,
                    repr(float(result.real_balance_trace[t])),
                    "" if virtual is None else repr(float(virtual[t])),
                    *(int(v) for v in result.actuation[:, t]),
                ]
            )


def write_summary_csv(result: SimResult, loads: LoadSet, path) -> None:
    """One-run summary: service factors, spend, disconnection count."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerow(["psf", repr(result.psf)])
        writer.writerow(["total_spend", repr(result.total_spend)])
        writer.writerow(["disconnection_days", result.disconnection_days])
        writer.writerow(
            [
                "first_disconnect_step",
                "" if result.first_disconnect_step is None else result.first_disconnect_step,
            ]
        )
        for k, name in enumerate(loads.names):
            writer.writerow([f"sf_{name}", repr(float(result.sf[k]))])
