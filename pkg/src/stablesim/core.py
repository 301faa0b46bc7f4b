"""Domain state for a collateral-backed stablecoin market.

Two aggregate agents drive the market. A speculator holds crypto collateral
and mints stablecoins against it as liabilities, adjusting the outstanding
supply each period. A holder owns the coins and supplies the demand side.
Every closed-form result in the simulator runs off three reduced quantities
derived here: dollar demand for new coins, the (negated) free supply offered
back to the market, and the dollar value of the speculator's collateral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Union

if TYPE_CHECKING:  # pragma: no cover - type-only import, avoids a cycle
    from .simulate import ReturnModel


class FailureReason(Enum):
    """Terminal failure modes of the market."""

    INFEASIBLE_LIQUIDATION = "InfeasibleLiquidation"  # no supply change can satisfy the liquidation constraint
    PRICE_FLOOR = "PriceFloor"  # coin price stayed below the configured floor


class StatusTag(Enum):
    NORMAL = "Normal"
    RECOVERY = "Recovery"
    FAILED = "Failed"


@dataclass(frozen=True)
class SystemStatus:
    """Operating condition of the market after a step.

    Recovery marks a step where the speculator's own risk limit was
    unattainable and only the protocol's liquidation constraint was
    enforced. Failed is absorbing: once set, no further steps execute.
    """

    tag: StatusTag
    reason: FailureReason | None = None  # set exactly when tag is FAILED

    def __post_init__(self) -> None:
        if (self.tag is StatusTag.FAILED) != (self.reason is not None):
            raise ValueError("reason must be given when and only when tag is FAILED")

    @property
    def failed(self) -> bool:
        return self.tag is StatusTag.FAILED

    @classmethod
    def normal(cls) -> "SystemStatus":
        return cls(StatusTag.NORMAL)

    @classmethod
    def recovery(cls) -> "SystemStatus":
        return cls(StatusTag.RECOVERY)

    @classmethod
    def failure(cls, reason: FailureReason) -> "SystemStatus":
        return cls(StatusTag.FAILED, reason)


@dataclass(frozen=True)
class FixedDollarDemand:
    """Constant dollar demand: the holder brings the same budget every period
    and re-offers the whole outstanding supply, so free supply equals the
    speculator's liabilities."""

    dollars: float = 100.0

    def __post_init__(self) -> None:
        if not (self.dollars > 0.0) or not math.isfinite(self.dollars):
            raise ValueError(f"demand dollars must be positive and finite, got {self.dollars}")


@dataclass(frozen=True)
class HolderWeightsDemand:
    """Demand derived from the holder's portfolio weights and current wealth."""


DemandMode = Union[FixedDollarDemand, HolderWeightsDemand]


@dataclass(frozen=True)
class MarketParams:
    """Market-wide constants held fixed over a simulated path."""

    liquidation_ratio: float = 1.5  # collateral multiple the protocol demands per coin issued
    return_memory: float = 0.1  # EWMA weight on the newest gross collateral return
    variance_memory: float = 0.1  # EWMA weight on the newest log return and squared residual
    demand: DemandMode = field(default_factory=FixedDollarDemand)
    return_model: "ReturnModel | None" = None  # collateral return generator; simulator default when None
    price_floor: float = 0.5  # coin price below this counts toward failure
    price_floor_patience: int = 1  # consecutive breaching steps required to fail

    def __post_init__(self) -> None:
        if not (self.liquidation_ratio > 0.0):
            raise ValueError(f"liquidation_ratio must be positive, got {self.liquidation_ratio}")
        for name in ("return_memory", "variance_memory"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not (self.price_floor >= 0.0):
            raise ValueError(f"price_floor must be non-negative, got {self.price_floor}")
        if self.price_floor_patience < 1:
            raise ValueError(f"price_floor_patience must be at least 1, got {self.price_floor_patience}")


@dataclass(frozen=True)
class SpeculatorState:
    """Balance sheet and return beliefs of the aggregate speculator.

    Liabilities are stablecoins outstanding at one-dollar face value, so the
    number doubles as the coin supply. Beliefs are exponentially weighted
    moving estimates updated once per period from the collateral price.
    """

    ether: float  # collateral units held
    liabilities: float  # stablecoins outstanding
    exp_return: float  # estimate of the gross one-period collateral return
    exp_log_return: float  # estimate of the one-period log return
    exp_variance: float  # estimate of the log-return variance

    def __post_init__(self) -> None:
        if not (self.ether >= 0.0):
            raise ValueError(f"ether must be non-negative, got {self.ether}")
        if not (self.liabilities >= 0.0):
            raise ValueError(f"liabilities must be non-negative, got {self.liabilities}")
        if not (self.exp_return > 0.0):
            raise ValueError(f"exp_return must be positive, got {self.exp_return}")
        if not (self.exp_variance >= 0.0):
            raise ValueError(f"exp_variance must be non-negative, got {self.exp_variance}")


@dataclass(frozen=True)
class HolderState:
    """Portfolio of the aggregate coin holder.

    After every settlement the holder owns the entire outstanding supply.
    Ether is genuine state in holder-weights mode; in fixed-dollar mode it is
    bookkeeping only and may go negative over long issuance runs, so it is
    deliberately not validated.
    """

    ether: float  # collateral units held
    coins: float  # stablecoins held; equals outstanding supply after settlement
    weight_coin: float = 1.0  # portfolio weight placed on the stablecoin
    weight_ether: float = 0.0  # portfolio weight placed on collateral

    def __post_init__(self) -> None:
        if not (self.coins >= 0.0):
            raise ValueError(f"coins must be non-negative, got {self.coins}")
        if not (0.0 <= self.weight_coin <= 1.0) or not (0.0 <= self.weight_ether <= 1.0):
            raise ValueError("portfolio weights must lie in [0, 1]")
        if abs(self.weight_coin + self.weight_ether - 1.0) > 1e-12:
            raise ValueError(
                f"portfolio weights must sum to 1, got {self.weight_coin} + {self.weight_ether}"
            )


@dataclass(frozen=True)
class ClearingInputs:
    """Reduced quantities that determine one period's market clearing.

    demand is the dollars bid for coins this period (x >= 0).
    neg_free_supply is minus the coins offered for sale (y <= 0), so the
    clearing denominator is delta - y and delta > y keeps prices positive.
    collateral_value is the speculator's collateral marked at the current
    price (z >= 0).
    """

    demand: float
    neg_free_supply: float
    collateral_value: float

    def __post_init__(self) -> None:
        if not (self.demand >= 0.0):
            raise ValueError(f"demand must be non-negative, got {self.demand}")
        if not (self.neg_free_supply <= 0.0):
            raise ValueError(f"neg_free_supply must be non-positive, got {self.neg_free_supply}")
        if not (self.collateral_value >= 0.0):
            raise ValueError(f"collateral_value must be non-negative, got {self.collateral_value}")


def derive_clearing_inputs(
    speculator: SpeculatorState,
    holder: HolderState,
    collateral_price: float,
    params: MarketParams,
) -> ClearingInputs:
    """Build the period's clearing inputs from agent state and the demand mode.

    Fixed-dollar mode pins demand at the configured budget and treats the
    entire outstanding supply as offered (free supply = liabilities). In
    holder-weights mode demand is the coin-weighted slice of the holder's
    collateral wealth and free supply is the coin-weighted slice of coin
    holdings, both net of the supply the speculator already owes.

    Args:
        speculator: current speculator balance sheet.
        holder: current holder portfolio.
        collateral_price: dollar price of one collateral unit, > 0.
        params: market constants carrying the demand mode.

    Returns:
        ClearingInputs for the period.
    """
    if not (collateral_price > 0.0):
        raise ValueError(f"collateral_price must be positive, got {collateral_price}")
    mode = params.demand
    if isinstance(mode, FixedDollarDemand):
        demand = mode.dollars
        neg_free = -speculator.liabilities
    else:
        demand = holder.weight_coin * holder.ether * collateral_price
        neg_free = holder.weight_coin * holder.coins - speculator.liabilities
    return ClearingInputs(
        demand=demand,
        neg_free_supply=neg_free,
        collateral_value=speculator.ether * collateral_price,
    )


def leverage(speculator: SpeculatorState, collateral_price: float, liquidation_ratio: float) -> float:
    """Constraint-scaled leverage: ratio * liabilities / collateral value.

    The protocol liquidates when this exceeds 1. Zero liabilities give zero
    leverage regardless of collateral; positive liabilities with worthless
    collateral are rejected rather than returned as infinity.
    """
    if not (collateral_price > 0.0):
        raise ValueError(f"collateral_price must be positive, got {collateral_price}")
    if not (liquidation_ratio > 0.0):
        raise ValueError(f"liquidation_ratio must be positive, got {liquidation_ratio}")
    if speculator.liabilities == 0.0:
        return 0.0
    assets = speculator.ether * collateral_price
    if assets <= 0.0:
        raise ValueError("leverage undefined: positive liabilities against zero collateral value")
    return liquidation_ratio * speculator.liabilities / assets


def holder_value(holder: HolderState, collateral_price: float, coin_price: float) -> float:
    """Mark the holder's portfolio to market in dollars."""
    if not (collateral_price > 0.0):
        raise ValueError(f"collateral_price must be positive, got {collateral_price}")
    if not (coin_price >= 0.0):
        raise ValueError(f"coin_price must be non-negative, got {coin_price}")
    return holder.ether * collateral_price + holder.coins * coin_price
