import numpy as np
import pytest

from conftest import assert_sim_invariants, constant_series
from prepaid_ems import afg
from prepaid_ems.model import (
    Budget,
    DemandSeries,
    LoadSet,
    Tariff,
    TimeGrid,
    compute_budget,
    daily_average,
    demand_indicator,
)
from prepaid_ems.sim import (
    PlanShapeMismatch,
    ShapeMismatch,
    count_disconnection_days,
    simulate_baseline,
    simulate_schedule,
    simulate_thresholds,
    write_summary_csv,
    write_trace_csv,
)


def afg_plan(avg, loads, tariff, budget):
    plan = afg.solve_greedy(avg, loads, tariff, budget)
    recharges = afg.compute_recharges(plan, avg, tariff)
    return plan, afg.compute_thresholds(plan, recharges, avg, tariff)


class TestSimulateThresholds:
    def test_worked_closed_loop(self, two_loads, tariff):
        # constant daily-average truth at 15-min steps: heater runs all 96
        # steps, pump exactly 12 (3 h), wallet ends non-negative
        avg = daily_average(
            constant_series(TimeGrid(0.25, 96, 1), [100.0, 200.0])
        )
        budget = Budget(3.0)
        _, tplan = afg_plan(avg, two_loads, tariff, budget)
        truth = constant_series(TimeGrid(0.25, 96, 1), [100.0, 200.0])
        result = simulate_thresholds(tplan, truth, two_loads, tariff, budget)
        assert result.actuation[0].sum() == 96
        assert result.actuation[1].sum() == 12
        assert result.final_real_balance >= 0.0
        assert result.psf == pytest.approx(0.7375, abs=1e-6)
        assert_sim_invariants(result, truth, two_loads, tariff, budget)

    def test_zero_thresholds_full_recharge_serves_all(self, two_loads, tariff):
        grid = TimeGrid(1.0, 24, 2)
        truth = constant_series(grid, [100.0, 50.0])
        total_cost = tariff.alpha * grid.step_hours * truth.power.sum()
        budget = Budget(2 * total_cost)
        tplan = afg.ThresholdPlan(
            np.zeros((2, 2)), np.full(2, total_cost), latching=True
        )
        result = simulate_thresholds(tplan, truth, two_loads, tariff, budget)
        assert np.array_equal(result.actuation, demand_indicator(truth))
        assert result.disconnection_days == 0

    def test_threshold_above_recharge_never_actuates(self, two_loads, tariff):
        grid = TimeGrid(1.0, 24, 1)
        truth = constant_series(grid, [100.0, 50.0])
        budget = Budget(100.0)
        tplan = afg.ThresholdPlan(
            np.array([[0.0], [5.0 + 1e-4]]), np.array([5.0]), latching=True
        )
        result = simulate_thresholds(tplan, truth, two_loads, tariff, budget)
        assert result.actuation[1].sum() == 0
        assert result.actuation[0].sum() == 24

    def test_plan_shape_mismatch(self, two_loads, tariff):
        truth = constant_series(TimeGrid(1.0, 24, 2), [100.0, 50.0])
        tplan = afg.ThresholdPlan(np.zeros((2, 1)), np.array([1.0]))
        with pytest.raises(PlanShapeMismatch):
            simulate_thresholds(tplan, truth, two_loads, tariff, Budget(1.0))

    def test_latching_keeps_disabled_loads_off(self, two_loads, tariff):
        # pump's threshold trips mid-day; once off it must stay off even
        # though the balance never dips further (constant drain)
        grid = TimeGrid(1.0, 24, 1)
        truth = constant_series(grid, [100.0, 200.0])
        budget = Budget(3.0)
        avg = daily_average(truth)
        _, tplan = afg_plan(avg, two_loads, tariff, budget)
        result = simulate_thresholds(tplan, truth, two_loads, tariff, budget)
        on = result.actuation[1]
        first_off = int(np.argmin(on)) if 0 in on else len(on)
        assert on[first_off:].sum() == 0  # prefix pattern

    def test_virtual_trace_recharges_at_day_start(self, two_loads, tariff):
        grid = TimeGrid(1.0, 24, 2)
        truth = constant_series(grid, [0.0, 0.0])
        tplan = afg.ThresholdPlan(
            np.full((2, 2), 99.0), np.array([1.5, 2.5]), latching=True
        )
        result = simulate_thresholds(tplan, truth, two_loads, tariff, Budget(4.0))
        assert result.virtual_balance_trace[0] == pytest.approx(1.5)
        assert result.virtual_balance_trace[24] == pytest.approx(4.0)


class TestSimulateSchedule:
    def test_full_schedule_full_budget(self, two_loads, tariff):
        grid = TimeGrid(1.0, 24, 1)
        truth = constant_series(grid, [100.0, 50.0])
        budget = compute_budget(truth, tariff, 1.0)
        d = demand_indicator(truth)
        result = simulate_schedule(d, truth, two_loads, tariff, budget)
        assert np.allclose(result.sf, 1.0)
        assert result.disconnection_days == 0
        assert_sim_invariants(result, truth, two_loads, tariff, budget)

    def test_scheduling_idle_slots_costs_nothing(self, two_loads, tariff):
        grid = TimeGrid(12.0, 2, 1)
        truth = DemandSeries(grid, [[100.0, 0.0], [0.0, 0.0]])
        schedule = np.ones((2, 2), dtype=np.int8)
        budget = Budget(10.0)
        result = simulate_schedule(schedule, truth, two_loads, tariff, budget)
        assert result.total_spend == pytest.approx(0.001 * 12 * 100)
        assert result.actuation.sum() == 1

    def test_shape_mismatch(self, two_loads, tariff):
        truth = constant_series(TimeGrid(1.0, 24, 1), [100.0, 50.0])
        with pytest.raises(ShapeMismatch):
            simulate_schedule(
                np.ones((2, 5)), truth, two_loads, tariff, Budget(1.0)
            )
        with pytest.raises(ShapeMismatch):
            simulate_schedule(
                np.full((2, 24), 2), truth, two_loads, tariff, Budget(1.0)
            )


class TestSimulateBaseline:
    def test_full_budget_serves_everything(self, two_loads, tariff):
        grid = TimeGrid(0.25, 96, 3)
        rng = np.random.default_rng(2)
        truth = DemandSeries(
            grid, rng.uniform(0, 800, (2, grid.total_steps)) * (rng.random((2, grid.total_steps)) < 0.5)
        )
        budget = compute_budget(truth, tariff, 1.0)
        result = simulate_baseline(truth, two_loads, tariff, budget)
        assert np.array_equal(result.actuation, demand_indicator(truth))
        assert result.disconnection_days == 0
        assert_sim_invariants(result, truth, two_loads, tariff, budget)

    def test_hand_stepped_disconnection(self, tariff):
        # one load at 1 $/h demanded around the clock for 2 days, 5 $
        # balance: served hours 0-4, disconnected from hour 5, day 2 dark
        loads = LoadSet.from_pairs([("x", 1.0)])
        grid = TimeGrid(1.0, 24, 2)
        truth = constant_series(grid, [1000.0])
        budget = Budget(5.0)
        result = simulate_baseline(truth, loads, tariff, budget)
        assert result.actuation[0].sum() == 5
        assert result.first_disconnect_step == 5
        assert result.disconnection_days == 1
        assert_sim_invariants(result, truth, loads, tariff, budget)

    def test_zero_demand_never_disconnects(self, two_loads, tariff):
        truth = constant_series(TimeGrid(1.0, 24, 2), [0.0, 0.0])
        result = simulate_baseline(truth, two_loads, tariff, Budget(1.0))
        assert result.total_spend == 0.0
        assert result.first_disconnect_step is None
        assert np.isnan(result.sf).all()
        assert result.psf == 0.0

    def test_monotone_in_budget(self, two_loads, tariff):
        grid = TimeGrid(1.0, 24, 2)
        rng = np.random.default_rng(8)
        truth = DemandSeries(grid, rng.uniform(0, 500, (2, grid.total_steps)))
        last = -1.0
        for balance in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
            result = simulate_baseline(truth, two_loads, tariff, Budget(balance))
            assert result.psf >= last - 1e-12
            last = result.psf


class TestDisconnectionDays:
    def test_positive_trace(self):
        grid = TimeGrid(1.0, 24, 3)
        assert count_disconnection_days(np.ones(72), grid) == 0

    def test_noon_day_13_of_30(self):
        grid = TimeGrid(1.0, 24, 30)
        trace = np.zeros(720)
        trace[: 12 * 24 + 12] = 5.0  # positive until noon of day 13
        assert count_disconnection_days(trace, grid) == 17

    def test_flat_zero(self):
        grid = TimeGrid(1.0, 24, 4)
        assert count_disconnection_days(np.zeros(96), grid) == 4

    def test_length_checked(self):
        grid = TimeGrid(1.0, 24, 2)
        with pytest.raises(ShapeMismatch):
            count_disconnection_days(np.ones(24), grid)


class TestInvariantsAcrossPolicies:
    def test_money_conservation_random_battery(self, two_loads, tariff):
        rng = np.random.default_rng(5)
        for trial in range(20):
            grid = TimeGrid(1.0, 24, int(rng.integers(1, 4)))
            power = rng.uniform(0, 1200, (2, grid.total_steps))
            power *= rng.random((2, grid.total_steps)) < 0.6
            truth = DemandSeries(grid, power)
            budget = compute_budget(truth, tariff, float(rng.uniform(0.2, 1.0)))
            baseline = simulate_baseline(truth, two_loads, tariff, budget)
            assert_sim_invariants(baseline, truth, two_loads, tariff, budget)
            avg = daily_average(truth)
            _, tplan = afg_plan(avg, two_loads, tariff, budget)
            threshold = simulate_thresholds(tplan, truth, two_loads, tariff, budget)
            assert_sim_invariants(threshold, truth, two_loads, tariff, budget)
            schedule = (rng.random(power.shape) < 0.5).astype(np.int8)
            scheduled = simulate_schedule(schedule, truth, two_loads, tariff, budget)
            assert_sim_invariants(scheduled, truth, two_loads, tariff, budget)


def test_trace_and_summary_csv(tmp_path, two_loads, tariff):
    grid = TimeGrid(1.0, 24, 1)
    truth = constant_series(grid, [100.0, 50.0])
    budget = compute_budget(truth, tariff, 0.5)
    result = simulate_baseline(truth, two_loads, tariff, budget)
    trace_path = tmp_path / "trace.csv"
    write_trace_csv(result, two_loads, trace_path)
    lines = trace_path.read_text().splitlines()
    assert lines[0] == "t,real_balance,virtual_balance,a_heater,a_pump"
    assert len(lines) == 25
    summary_path = tmp_path / "summary.csv"
    write_summary_csv(result, two_loads, summary_path)
    text = summary_path.read_text()
    assert "psf," in text and "sf_pump," in text
