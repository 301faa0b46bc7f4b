"""Risk appetites, leverage caps, and the feasible range of supply changes.

The speculator self-imposes a leverage cap exp(mu - alpha * sigma^b) derived
from a value-at-risk appetite, tightening it when expected volatility rises
(b > 0) or, for the procyclical variants, loosening it (b < 0). Feasible
supply changes are the solutions of a quadratic inequality: the post-trade
liabilities must stay inside the cap applied to post-trade collateral value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from scipy.special import erfinv

from .core import ClearingInputs

_SQRT2 = math.sqrt(2.0)


class DegenerateSigmaError(ValueError):
    """Raised when a negative volatility exponent meets zero volatility."""


@dataclass(frozen=True)
class VaRNormal:
    """Cap calibrated so a normal one-period loss breaches it with the given probability."""

    quantile: float  # tail probability in (0, 0.5)

    def __post_init__(self) -> None:
        if not (0.0 < self.quantile < 0.5):
            raise ValueError(f"quantile must lie in (0, 0.5), got {self.quantile}")


@dataclass(frozen=True)
class VaRHeavyTail:
    """Cap calibrated from a distribution-free (second-moment) tail bound."""

    quantile: float  # tail probability in (0, 0.5]

    def __post_init__(self) -> None:
        if not (0.0 < self.quantile <= 0.5):
            raise ValueError(f"quantile must lie in (0, 0.5], got {self.quantile}")


@dataclass(frozen=True)
class Generalized:
    """Direct choice of the cap parameters.

    cyclicality < 0 makes the cap loosen as volatility rises, the
    destabilizing regime; cyclicality > 0 is the prudent direction.
    """

    alpha: float  # volatility price; higher means more conservative
    cyclicality: float  # exponent b applied to volatility

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or not math.isfinite(self.cyclicality):
            raise ValueError("alpha and cyclicality must be finite")


@dataclass(frozen=True)
class RiskNeutral:
    """No self-imposed cap: only the protocol's liquidation constraint binds."""


RiskConfig = Union[VaRNormal, VaRHeavyTail, Generalized, RiskNeutral]


def alpha_from_quantile_normal(quantile: float) -> float:
    """Volatility price for a normal tail: the upper-tail z-score of the quantile.

    quantile 0.1 -> 1.2815515655..., quantile 0.01 -> 2.3263478740...
    """
    if not (0.0 < quantile < 0.5):
        raise ValueError(f"quantile must lie in (0, 0.5), got {quantile}")
    return -_SQRT2 * float(erfinv(2.0 * quantile - 1.0))


def alpha_from_quantile_heavytail(quantile: float) -> float:
    """Volatility price from the second-moment tail bound P(|X| > a sigma) <= 1/a^2 / 2.

    quantile 0.1 -> sqrt(5), quantile 0.01 -> sqrt(50). The boundary 0.5 maps
    to exactly 1 and is accepted.
    """
    if not (0.0 < quantile <= 0.5):
        raise ValueError(f"quantile must lie in (0, 0.5], got {quantile}")
    return math.sqrt(1.0 / (2.0 * quantile))


@lru_cache(maxsize=None)
def _resolve(config: RiskConfig) -> tuple[float, float] | None:
    """(alpha, cyclicality) for a config, or None for risk neutrality."""
    if isinstance(config, RiskNeutral):
        return None
    if isinstance(config, VaRNormal):
        return (alpha_from_quantile_normal(config.quantile), 1.0)
    if isinstance(config, VaRHeavyTail):
        return (alpha_from_quantile_heavytail(config.quantile), 1.0)
    if isinstance(config, Generalized):
        return (config.alpha, config.cyclicality)
    raise TypeError(f"unknown risk config: {config!r}")


def lambda_tilde_uncapped(config: RiskConfig, mean_log: float, sigma: float) -> float:
    """Raw leverage cap exp(mean_log - alpha * sigma^cyclicality).

    May exceed 1; the protocol never allows leverage above 1, so decisions
    use the capped variant. Risk neutrality returns exactly 1.

    Raises:
        DegenerateSigma: negative cyclicality with sigma == 0 (the cap
            would be infinite).
    """
    resolved = _resolve(config)
    if resolved is None:
        return 1.0
    if not (sigma >= 0.0):
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    alpha, b = resolved
    if sigma == 0.0 and b < 0.0:
        raise DegenerateSigmaError("volatility is zero and the cyclicality exponent is negative")
    return math.exp(mean_log - alpha * sigma**b)


def lambda_tilde(config: RiskConfig, mean_log: float, sigma: float) -> float:
    """Leverage cap actually applied to decisions: the raw cap, at most 1."""
    return min(1.0, lambda_tilde_uncapped(config, mean_log, sigma))


@dataclass(frozen=True)
class FeasibleInterval:
    """Solution set of the leverage constraint in the supply change.

    When feasible, the set is [lo, hi] intersected with the clearing domain
    (delta > neg_free_supply); lo is already clipped to that domain. Two
    distinct causes of infeasibility are distinguished: the constraint
    quadratic can lack real roots, or its root interval can lie entirely
    outside the clearing domain.
    """

    feasible: bool
    lo: float = math.nan
    hi: float = math.nan
    no_real_roots: bool = False  # infeasibility came from a negative discriminant

    @classmethod
    def interval(cls, lo: float, hi: float) -> "FeasibleInterval":
        return cls(True, lo, hi)

    @classmethod
    def empty(cls, *, no_real_roots: bool) -> "FeasibleInterval":
        return cls(False, no_real_roots=no_real_roots)

    def contains(self, value: float) -> bool:
        return self.feasible and self.lo <= value <= self.hi


def _interval_core(
    x: float, y: float, z: float, liabilities: float, cap: float, ratio: float
) -> tuple[int, float, float]:
    """Float kernel for the constraint interval.

    Solves -ratio*d^2 + b*d + c >= 0 with
    b = cap*(z + x) - ratio*(liabilities - y) and
    c = y*(ratio*liabilities - cap*z), then intersects with d > y.

    Returns (status, lo, hi); status 0 = feasible, 1 = no real roots,
    2 = roots exist but lie outside the clearing domain.
    """
    a = -ratio
    b = cap * (z + x) - ratio * (liabilities - y)
    c = y * (ratio * liabilities - cap * z)
    disc = b * b - 4.0 * a * c
    if disc >= 0.0:
        s = math.sqrt(disc)
        q = -0.5 * (b + math.copysign(s, b))
        if q != 0.0:
            r1 = q / a
            r2 = c / q
        else:
            r1 = r2 = 0.0
        lo = min(r1, r2)
        hi = max(r1, r2)
    else:
        # Treat a barely negative discriminant as a tangency so numerical
        # noise does not flip a boundary case to infeasible.
        tol = 1e-12 * max(b * b, abs(4.0 * a * c))
        if disc < -tol:
            return (1, math.nan, math.nan)
        lo = hi = b / (2.0 * ratio)
    if hi <= y:
        return (2, math.nan, math.nan)
    return (0, max(lo, y), hi)


def constraint_interval(
    inputs: ClearingInputs, liabilities: float, leverage_cap: float, liquidation_ratio: float
) -> FeasibleInterval:
    """Feasible supply changes under a leverage cap.

    A change d trades at price demand / (d - neg_free_supply) and must leave
    ratio * (liabilities + d) within cap * (post-trade collateral value).
    That is a downward parabola in d, so the solution is a single interval
    (possibly empty) clipped to the clearing domain d > neg_free_supply.

    Args:
        inputs: the period's clearing inputs.
        liabilities: speculator liabilities before the trade, >= 0.
        leverage_cap: cap on constraint-scaled leverage, in (0, 1].
        liquidation_ratio: protocol collateral multiple, > 0.

    Returns:
        FeasibleInterval; check .feasible before using the endpoints.
    """
    if not (liabilities >= 0.0):
        raise ValueError(f"liabilities must be non-negative, got {liabilities}")
    if not (0.0 < leverage_cap <= 1.0):
        raise ValueError(f"leverage_cap must lie in (0, 1], got {leverage_cap}")
    if not (liquidation_ratio > 0.0):
        raise ValueError(f"liquidation_ratio must be positive, got {liquidation_ratio}")
    status, lo, hi = _interval_core(
        inputs.demand,
        inputs.neg_free_supply,
        inputs.collateral_value,
        liabilities,
        leverage_cap,
        liquidation_ratio,
    )
    if status == 0:
        return FeasibleInterval.interval(lo, hi)
    return FeasibleInterval.empty(no_real_roots=(status == 1))


def is_maintainable(
    inputs: ClearingInputs,
    liabilities: float,
    leverage_cap: float,
    liquidation_ratio: float,
    weight_coin: float,
    weight_ether: float,
) -> bool:
    """Closed-form test that some supply change satisfies the leverage constraint.

    With weight_coin = 1 + y/L and weight_ether = -y/L (y the negated free
    supply, L the liabilities), the condition

        (cap*(x + z) - ratio*L*weight_coin)^2 >= 4*ratio*cap*L*x*weight_ether

    is algebraically identical to the constraint quadratic having real
    roots, so this predicate matches the discriminant sign of
    constraint_interval exactly. It does not check the clearing-domain clip.
    """
    if not (liabilities >= 0.0):
        raise ValueError(f"liabilities must be non-negative, got {liabilities}")
    if not (0.0 < leverage_cap <= 1.0):
        raise ValueError(f"leverage_cap must lie in (0, 1], got {leverage_cap}")
    if not (liquidation_ratio > 0.0):
        raise ValueError(f"liquidation_ratio must be positive, got {liquidation_ratio}")
    x = inputs.demand
    z = inputs.collateral_value
    lhs = leverage_cap * (x + z) - liquidation_ratio * liabilities * weight_coin
    rhs = 4.0 * liquidation_ratio * leverage_cap * liabilities * x * weight_ether
    return lhs * lhs >= rhs


def max_deleverage(inputs: ClearingInputs) -> float:
    """Most negative supply change whose repurchase cost the collateral covers.

    At d = y*z / (z + x) the dollars spent buying back supply,
    -d * demand / (d - y), equal the collateral value z exactly; any deeper
    repurchase costs more than the speculator owns. Returns 0 when there is
    neither collateral nor demand.
    """
    x = inputs.demand
    y = inputs.neg_free_supply
    z = inputs.collateral_value
    if z + x == 0.0:
        return 0.0
    return y * z / (z + x)
