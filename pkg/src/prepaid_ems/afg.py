"""Average-forecast greedy rationing policy.

Given only the average power demand per load per day, pick per-day
enable durations maximizing the priority-weighted service, spending
strictly less than the wallet balance. Each load-day is an item in a
fractional knapsack: value density is the load's priority per hour of
its demanded time, cost is the price of running it for an hour. The
greedy pass over items in non-increasing benefit/cost order is exact
for this problem.

The resulting durations are turned into the control artifact actually
shipped to the household: one virtual-wallet recharge per day plus one
wallet threshold per load per day. Simulating those thresholds against
a constant daily-average demand reproduces the planned durations to
within one simulator timestep.
"""

from dataclasses import dataclass

import numpy as np

from prepaid_ems.model import (
    Budget,
    DailyAverageDemand,
    LoadSet,
    Tariff,
    effective_budget,
)

#: Added on top of the daily recharge to pin a fully disabled load's
#: threshold above any balance the virtual wallet can reach that day.
THRESHOLD_MARGIN = 1e-4


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class EnablePlan:
    """Planned enable duration per load per day, in hours.

    At most one load-day is fractional (strictly between zero and its
    cap); ``marginal`` points at it when present.
    """

    durations: np.ndarray  # [load, day], hours
    max_durations: np.ndarray  # [load, day], hours
    marginal: tuple[int, int] | None = None

    def __post_init__(self):
        s = np.array(self.durations, dtype=float)
        smax = np.array(self.max_durations, dtype=float)
        if s.shape != smax.shape or s.ndim != 2:
            raise ValueError(
                f"durations {s.shape} and max_durations {smax.shape} must be "
                f"matching 2-D matrices"
            )
        if np.any(smax < 0) or np.any(smax > 24):
            raise ValueError("max durations must lie in [0, 24] hours")
        if np.any(s < 0) or np.any(s > smax):
            raise ValueError("durations must lie in [0, max_duration]")
        fractional = np.argwhere((s > 0) & (s < smax))
        if len(fractional) > 1:
            raise ValueError(
                f"at most one load-day may be fractional, found {len(fractional)}"
            )
        if len(fractional) == 1 and self.marginal != tuple(fractional[0]):
            raise ValueError(
                f"marginal index {self.marginal} does not match the fractional "
                f"entry at {tuple(fractional[0])}"
            )
        s.setflags(write=False)
        smax.setflags(write=False)
        object.__setattr__(self, "durations", s)
        object.__setattr__(self, "max_durations", smax)


@dataclass(frozen=True)
class ThresholdPlan:
    """Control setpoints for the wallet simulator: per-day virtual
    recharges and per-load per-day disable thresholds, in dollars.

    ``latching`` decides whether a load disabled during a day may come
    back that day (greedy plans latch; threshold plans decoded from the
    detailed-forecast optimizer re-evaluate every step).
    """

    thresholds: np.ndarray  # [load, day], $
    recharges: np.ndarray  # [day], $
    latching: bool = True

    def __post_init__(self):
        thr = np.array(self.thresholds, dtype=float)
        rec = np.array(self.recharges, dtype=float)
        if thr.ndim != 2 or rec.ndim != 1 or thr.shape[1] != rec.shape[0]:
            raise ValueError(
                f"thresholds {thr.shape} must be [load, day] with one recharge "
                f"per day, got {rec.shape}"
            )
        if not (np.all(np.isfinite(thr)) and np.all(np.isfinite(rec))):
            raise ValueError("thresholds and recharges must be finite")
        if np.any(thr < 0):
            raise ValueError("thresholds must be non-negative")
        if np.any(rec < 0):
            raise ValueError("recharges must be non-negative")
        thr.setflags(write=False)
        rec.setflags(write=False)
        object.__setattr__(self, "thresholds", thr)
        object.__setattr__(self, "recharges", rec)

    @property
    def num_days(self) -> int:
        return self.recharges.shape[0]


def max_durations(avg: DailyAverageDemand) -> np.ndarray:
    """Duration cap per load-day: zero where there is no demand, a full
    day otherwise."""
    return _frozen(np.where(avg.power > 0, 24.0, 0.0))


def solve_greedy(
    avg: DailyAverageDemand, loads: LoadSet, tariff: Tariff, budget: Budget
) -> EnablePlan:
    """Exact greedy solution of the enable-duration problem.

    Items are ranked by benefit per dollar; each gets as many hours as
    the remaining budget affords, capped at its maximum. The first item
    that cannot be fully afforded becomes the single fractional
    (marginal) load-day and exhausts the budget. Ties in the ranking
    break toward higher priority, then earlier day, then load order, so
    results are reproducible.
    """
    if avg.power.shape[0] != len(loads):
        raise ValueError(
            f"averages have {avg.power.shape[0]} loads, load set has {len(loads)}"
        )
    smax = max_durations(avg)
    per_load_cap = smax.sum(axis=1)  # demanded hours across the horizon
    gammas = loads.gammas
    s = np.zeros_like(smax)

    items = []
    for k in range(len(loads)):
        if per_load_cap[k] == 0:
            continue  # never demanded; excluded from the objective
        benefit = gammas[k] / per_load_cap[k]
        for d in range(avg.num_days):
            if smax[k, d] == 0:
                continue
            cost_per_hour = tariff.alpha * avg.power[k, d]
            assert cost_per_hour > 0  # zero-cost items imply zero demand
            items.append((benefit / cost_per_hour, gammas[k], d, k, cost_per_hour))
    items.sort(key=lambda it: (-it[0], -it[1], it[2], it[3]))

    remaining = effective_budget(budget)
    marginal = None
    for _, _, d, k, cost_per_hour in items:
        if remaining <= 0:
            break
        hours = min(smax[k, d], remaining / cost_per_hour)
        s[k, d] = hours
        remaining -= cost_per_hour * hours
        if hours < smax[k, d]:
            if hours > 0:
                marginal = (k, d)
            break  # budget exhausted; everything ranked lower stays zero
    return EnablePlan(s, smax, marginal)


def compute_recharges(
    plan: EnablePlan, avg: DailyAverageDemand, tariff: Tariff
) -> np.ndarray:
    """Virtual-wallet recharge per day: the cost of running the planned
    durations at the forecast average powers."""
    return _frozen(tariff.alpha * (plan.durations * avg.power).sum(axis=0))


def compute_thresholds(
    plan: EnablePlan,
    recharges: np.ndarray,
    avg: DailyAverageDemand,
    tariff: Tariff,
) -> ThresholdPlan:
    """Translate planned durations into wallet thresholds.

    Per load-day: disabled loads get a threshold just above the day's
    recharge (the balance never reaches it); fully enabled loads get
    zero; the marginal load's threshold is placed where the balance,
    draining at the rate of all enabled loads, arrives after exactly its
    planned hours.
    """
    num_loads, num_days = plan.durations.shape
    thresholds = np.zeros((num_loads, num_days))
    for d in range(num_days):
        recharge = recharges[d]
        enabled = plan.durations[:, d] > 0
        drain_w = avg.power[enabled, d].sum()
        for k in range(num_loads):
            s = plan.durations[k, d]
            if s == 0.0:
                thresholds[k, d] = recharge + THRESHOLD_MARGIN
            elif s == plan.max_durations[k, d]:
                thresholds[k, d] = 0.0
            else:
                # Mathematically in [0, recharge]; the max() only strips
                # the negative rounding dust left when the marginal load
                # is the day's sole enabled load and the terms cancel.
                thresholds[k, d] = max(
                    0.0, recharge - tariff.alpha * s * drain_w
                )
    return ThresholdPlan(thresholds, recharges, latching=True)


def write_threshold_csv(plan: ThresholdPlan, loads: LoadSet, path) -> None:
    """Serialize the control setpoints: one threshold row per load per
    day plus a ``__recharge__`` row per day."""
    import csv

    if plan.thresholds.shape[0] != len(loads):
        raise ValueError(
            f"plan has {plan.thresholds.shape[0]} loads, load set has {len(loads)}"
        )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "load", "dollars"])
        for d in range(plan.num_days):
            for k, name in enumerate(loads.names):
                writer.writerow([d, name, repr(float(plan.thresholds[k, d]))])
            writer.writerow([d, "__recharge__", repr(float(plan.recharges[d]))])
