"""Squeeze attacks and scripted deleveraging spirals."""

import math

import pytest

from stablesim import (
    AttackPlan,
    FixedDollarDemand,
    HolderWeightsDemand,
    MarketParams,
    MarketFailedError,
    NoProfitableAttackError,
    OversoldExitError,
    RiskNeutral,
    SimConfig,
    optimize_attack,
    run_attack,
    run_spiral,
)

SQUEEZE_SCRIPT = (85.0, 85.0, 82.0, 82.0)
SPIRAL_SCRIPT = (85.0, 83.0, 82.0, 81.0)


def replay_config(**kw):
    """Overleveraged market with frozen return beliefs, the squeeze setting."""
    defaults = dict(
        params=MarketParams(
            return_memory=0.0,
            variance_memory=0.0,
            demand=FixedDollarDemand(100.0),
        ),
        risk=RiskNeutral(),
        init_ether=1.8,
        init_liabilities=100.583,
        init_exp_return=1.00583,
        init_exp_log_return=0.00162,
        init_exp_sigma=0.0,
        init_collateral_price=85.0,
        horizon=8,
        n_paths=1,
        master_seed=0,
    )
    defaults.update(kw)
    return SimConfig(**defaults)


def benchmark_plan(**kw):
    defaults = dict(
        entry_time=1,
        entry_dollars=1.0,
        exit_time=3,
        exit_dollars=1.083,
        price_script=SQUEEZE_SCRIPT,
    )
    defaults.update(kw)
    return AttackPlan(**defaults)


class TestPlanValidation:
    def test_times(self):
        with pytest.raises(ValueError):
            benchmark_plan(entry_time=0)
        with pytest.raises(ValueError):
            benchmark_plan(exit_time=1)

    def test_amounts(self):
        with pytest.raises(ValueError):
            benchmark_plan(entry_dollars=-1.0)
        with pytest.raises(ValueError):
            benchmark_plan(exit_dollars=-0.5)

    def test_script(self):
        with pytest.raises(ValueError):
            benchmark_plan(price_script=(85.0, 85.0, 82.0))  # exit step uncovered
        with pytest.raises(ValueError):
            benchmark_plan(price_script=(85.0, 85.0, 0.0, 82.0))


class TestRunAttack:
    def test_benchmark_squeeze(self):
        result = run_attack(benchmark_plan(), replay_config())
        assert result.profit == pytest.approx(0.083, abs=1e-12)
        assert result.return_pct == pytest.approx(8.3, abs=0.3)
        assert result.coins_acquired == pytest.approx(1.0 / result.entry_price, rel=1e-12)
        assert result.entry_price == pytest.approx(0.9992, abs=5e-4)
        # squeeze shape: buy cheap, watch the forced repurchase lift the
        # price, sell into it
        assert result.pre_exit_price > result.entry_price
        assert len(result.rows) == 3

    def test_exit_price_recomputes(self):
        result = run_attack(benchmark_plan(), replay_config())
        supply_before_exit = result.rows[1].liabilities
        delta_exit = result.rows[2].supply_change
        implied = (100.0 + 1.0) / (
            delta_exit + supply_before_exit + result.coins_acquired
        )
        assert result.exit_price == pytest.approx(implied, rel=1e-12)

    def test_demand_and_flow_bookkeeping(self):
        result = run_attack(benchmark_plan(), replay_config())
        assert result.demand_by_step[0] == pytest.approx(101.0)
        assert result.demand_by_step[1] == pytest.approx(101.0)
        assert result.demand_by_step[2] == pytest.approx(101.0 - 1.083, rel=1e-12)
        assert result.flow_by_step == (1.0, 0.0, -1.083)

    def test_oversold_exit(self):
        with pytest.raises(OversoldExitError):
            run_attack(benchmark_plan(exit_dollars=2.0), replay_config())

    def test_exit_boundary_not_oversold(self):
        probe = run_attack(benchmark_plan(exit_dollars=0.0), replay_config())
        cap = probe.coins_acquired * probe.pre_exit_price
        result = run_attack(benchmark_plan(exit_dollars=cap * (1.0 - 1e-12)), replay_config())
        assert result.profit == pytest.approx(cap - 1.0, rel=1e-9)

    def test_zero_entry_matches_plain_path(self):
        plan = benchmark_plan(entry_dollars=0.0, exit_dollars=0.0)
        result = run_attack(plan, replay_config())
        assert result.profit == 0.0
        assert result.return_pct == 0.0
        assert result.coins_acquired == 0.0
        spiral = run_spiral(SQUEEZE_SCRIPT, replay_config())
        for row, srow in zip(result.rows, spiral[1:]):
            assert row.liabilities == srow.liabilities
            assert row.coin_price == srow.coin_price

    def test_market_failure_propagates(self):
        plan = benchmark_plan(price_script=(85.0, 40.0, 40.0, 40.0))
        with pytest.raises(MarketFailedError) as err:
            run_attack(plan, replay_config())
        assert err.value.step == 1

    def test_requires_fixed_dollar_demand(self):
        cfg = replay_config(params=MarketParams(demand=HolderWeightsDemand()))
        with pytest.raises(ValueError):
            run_attack(benchmark_plan(), cfg)


class TestOptimizeAttack:
    def test_finds_better_than_benchmark(self):
        plan, result = optimize_attack(replay_config(), SQUEEZE_SCRIPT, 1, 3)
        assert result.profit > 0.083
        assert result.return_pct > 8.3
        assert plan.exit_dollars == pytest.approx(
            plan.entry_dollars + result.profit, rel=1e-9)
        # the plan is self-consistent: replaying it reproduces the result
        replay = run_attack(plan, replay_config())
        assert replay.profit == result.profit
        assert replay.exit_price == result.exit_price

    def test_flat_script_has_no_edge(self):
        with pytest.raises(NoProfitableAttackError):
            optimize_attack(replay_config(), (85.0, 85.0, 85.0, 85.0), 1, 3)

    def test_rising_script_has_no_edge(self):
        with pytest.raises(NoProfitableAttackError):
            optimize_attack(replay_config(), (85.0, 86.0, 87.0, 88.0), 1, 3)

    def test_validation(self):
        with pytest.raises(ValueError):
            optimize_attack(replay_config(), SQUEEZE_SCRIPT, 2, 2)
        cfg = replay_config(params=MarketParams(demand=HolderWeightsDemand()))
        with pytest.raises(ValueError):
            optimize_attack(cfg, SQUEEZE_SCRIPT, 1, 3)


class TestRunSpiral:
    def test_initial_row(self):
        rows = run_spiral(SPIRAL_SCRIPT, replay_config())
        first = rows[0]
        assert first.step == 0
        assert first.collateral_price == 85.0
        assert math.isnan(first.supply_change)
        assert first.liabilities == 100.583
        assert first.coin_price == pytest.approx(100.0 / 100.583, rel=1e-12)
        assert first.ether == 1.8

    def test_contraction_path(self):
        rows = run_spiral(SPIRAL_SCRIPT, replay_config())
        assert len(rows) == 4
        liabilities = [r.liabilities for r in rows]
        assert liabilities[1] == pytest.approx(97.468, abs=5e-3)
        assert liabilities[2] == pytest.approx(93.363, abs=5e-3)
        assert liabilities[3] == pytest.approx(88.793, abs=5e-3)
        # forced contraction: supply falls, coin price climbs above par
        assert all(a > b for a, b in zip(liabilities, liabilities[1:]))
        assert rows[3].coin_price > 1.1

    def test_failing_script_ends_with_nan(self):
        rows = run_spiral((85.0, 40.0, 40.0), replay_config())
        assert math.isnan(rows[-1].coin_price)
        assert len(rows) == 2
