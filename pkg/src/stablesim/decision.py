"""The speculator's per-period supply decision and its settlement.

Expected profit from a supply change d trading at the clearing price
x / (d - y) is f(d) = r*d*x/(d-y) - d: issuance collects dollars now worth r
next period, repurchase retires dollar debt. f is strictly unimodal on the
clearing domain with a single interior maximum, so the decision is the
unconstrained optimum clamped into the feasible leverage interval, with a
fallback to the protocol-level interval when the speculator's own risk cap
is unattainable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .core import ClearingInputs, FailureReason, HolderState, SpeculatorState, SystemStatus
from .risk import RiskConfig, _interval_core, lambda_tilde


class Regime(Enum):
    """Which branch of the decision produced the supply change."""

    UNCONSTRAINED_OPTIMUM = "UnconstrainedOptimum"  # interior maximum was feasible
    CLAMPED_LOW = "ClampedLow"  # forced up to the lower feasible endpoint
    CLAMPED_HIGH = "ClampedHigh"  # forced down to the upper feasible endpoint
    RECOVERY = "Recovery"  # risk cap unattainable; protocol constraint only
    SETTLEMENT = "Settlement"  # no feasible change existed; market failed


@dataclass(frozen=True)
class StepDecision:
    """Outcome of one period's supply decision."""

    supply_change: float  # coins created (positive) or repurchased (negative)
    coin_price: float  # market-clearing stablecoin price; nan on failure
    regime: Regime


def clearing_price(inputs: ClearingInputs, supply_change: float) -> float:
    """Price at which a supply change clears: demand / (change - neg_free_supply)."""
    denom = supply_change - inputs.neg_free_supply
    if not (denom > 0.0):
        raise ValueError(
            f"supply change {supply_change} must exceed neg_free_supply {inputs.neg_free_supply}"
        )
    return inputs.demand / denom


def objective(inputs: ClearingInputs, exp_return: float, supply_change: float) -> float:
    """Expected profit f of a supply change, given the expected gross return."""
    return exp_return * supply_change * clearing_price(inputs, supply_change) - supply_change


def unconstrained_optimum(inputs: ClearingInputs, exp_return: float) -> float:
    """Interior maximizer of f: neg_free_supply + sqrt(-neg_free_supply * r * demand)."""
    if not (exp_return > 0.0):
        raise ValueError(f"exp_return must be positive, got {exp_return}")
    y = inputs.neg_free_supply
    return y + math.sqrt(-y * exp_return * inputs.demand)


_OK = 0
_RECOVERED = 1
_FAILED = 2


def _decide_core(
    x: float, y: float, z: float, liabilities: float, exp_return: float, cap: float, ratio: float
) -> tuple[float, float, Regime, int]:
    """Float kernel of the decision. Returns (delta, price, regime, flag).

    flag is _OK, _RECOVERED (risk cap dropped to 1), or _FAILED (no feasible
    change even at the protocol constraint; delta 0 and price nan).
    """
    if x == 0.0:
        # Zero demand degenerates the objective: every feasible trade clears
        # at price zero, so the speculator stands pat if standing pat is
        # allowed and otherwise cannot execute the forced deleveraging.
        status, _, hi = _interval_core(x, y, z, liabilities, cap, ratio)
        if status == 0 and hi >= 0.0:
            return (0.0, 0.0, Regime.CLAMPED_LOW, _OK)
        if cap < 1.0:
            status2, _, hi2 = _interval_core(x, y, z, liabilities, 1.0, ratio)
            if status2 == 0 and hi2 >= 0.0:
                return (0.0, 0.0, Regime.RECOVERY, _RECOVERED)
        return (0.0, math.nan, Regime.SETTLEMENT, _FAILED)

    dstar = y + math.sqrt(-y * exp_return * x)
    status, lo, hi = _interval_core(x, y, z, liabilities, cap, ratio)
    if status == 0:
        if dstar < lo:
            delta, regime = lo, Regime.CLAMPED_LOW
        elif dstar > hi:
            delta, regime = hi, Regime.CLAMPED_HIGH
        else:
            delta, regime = dstar, Regime.UNCONSTRAINED_OPTIMUM
        flag = _OK
    else:
        if cap >= 1.0:
            return (0.0, math.nan, Regime.SETTLEMENT, _FAILED)
        status2, lo2, hi2 = _interval_core(x, y, z, liabilities, 1.0, ratio)
        if status2 != 0:
            return (0.0, math.nan, Regime.SETTLEMENT, _FAILED)
        delta = min(max(dstar, lo2), hi2)
        regime = Regime.RECOVERY
        flag = _RECOVERED
    return (delta, x / (delta - y), regime, flag)


def decide(
    inputs: ClearingInputs,
    speculator: SpeculatorState,
    risk_config: RiskConfig,
    liquidation_ratio: float,
) -> tuple[StepDecision, SystemStatus]:
    """Choose the period's supply change.

    The unconstrained optimum is clamped into the feasible interval at the
    speculator's capped risk threshold. If that interval is empty, the
    decision retries at the protocol's liquidation constraint (cap 1) and
    reports Recovery; if even that is empty, the market fails with
    InfeasibleLiquidation and the returned decision carries no trade.

    Args:
        inputs: the period's clearing inputs.
        speculator: balance sheet and beliefs before the trade.
        risk_config: the speculator's risk appetite.
        liquidation_ratio: protocol collateral multiple, > 0.

    Returns:
        (decision, status). status.failed decisions must not be settled.
    """
    cap = lambda_tilde(risk_config, speculator.exp_log_return, math.sqrt(speculator.exp_variance))
    delta, price, regime, flag = _decide_core(
        inputs.demand,
        inputs.neg_free_supply,
        inputs.collateral_value,
        speculator.liabilities,
        speculator.exp_return,
        cap,
        liquidation_ratio,
    )
    if flag == _FAILED:
        status = SystemStatus.failure(FailureReason.INFEASIBLE_LIQUIDATION)
    elif flag == _RECOVERED:
        status = SystemStatus.recovery()
    else:
        status = SystemStatus.normal()
    return (StepDecision(delta, price, regime), status)


def settle(
    speculator: SpeculatorState,
    holder: HolderState,
    decision: StepDecision,
    collateral_price: float,
) -> tuple[SpeculatorState, HolderState]:
    """Execute a decided trade and update both balance sheets.

    Issuance sells supply_change coins at coin_price and converts the
    proceeds to collateral; repurchase runs the same flow in reverse.
    Afterwards the holder owns the entire outstanding supply. Feasible
    decisions keep both the speculator's collateral and the liabilities
    non-negative; sub-epsilon float undershoot is clamped to zero.

    Raises:
        ValueError: the decision carries no executable trade (failed step),
            or settlement would drive a balance materially negative.
    """
    if not (collateral_price > 0.0):
        raise ValueError(f"collateral_price must be positive, got {collateral_price}")
    if not math.isfinite(decision.coin_price):
        raise ValueError("cannot settle a failed decision")
    flow = decision.supply_change * decision.coin_price / collateral_price
    ether = speculator.ether + flow
    if ether < 0.0:
        if ether < -1e-9 * max(1.0, speculator.ether):
            raise ValueError(f"settlement drives speculator collateral negative: {ether}")
        ether = 0.0
    liabilities = speculator.liabilities + decision.supply_change
    if liabilities < 0.0:
        if liabilities < -1e-9 * max(1.0, speculator.liabilities):
            raise ValueError(f"settlement drives liabilities negative: {liabilities}")
        liabilities = 0.0
    new_speculator = replace(speculator, ether=ether, liabilities=liabilities)
    new_holder = replace(holder, ether=holder.ether - flow, coins=liabilities)
    return (new_speculator, new_holder)
