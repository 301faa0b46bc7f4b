"""Exponentially weighted moving estimates of returns and volatility.

All three estimates follow the one-parameter recursion
new = (1 - memory) * old + memory * observation. The variance observation is
the squared residual of the newest log return against the *freshly updated*
mean; using the stale mean instead changes every downstream closed form, so
the update order here is load-bearing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence


@dataclass(frozen=True)
class EwmaEstimator:
    """Running return/volatility beliefs for one price series.

    memory drives the log-return mean and variance; the gross-return mean
    can use its own weight via return_memory (None means share memory).
    """

    memory: float  # weight on the newest log return and squared residual
    mean_return: float  # gross-return estimate
    mean_log: float  # log-return estimate
    variance: float  # log-return variance estimate
    return_memory: float | None = None  # separate weight for the gross-return estimate

    def __post_init__(self) -> None:
        if not (0.0 <= self.memory <= 1.0):
            raise ValueError(f"memory must lie in [0, 1], got {self.memory}")
        if self.return_memory is not None and not (0.0 <= self.return_memory <= 1.0):
            raise ValueError(f"return_memory must lie in [0, 1], got {self.return_memory}")
        if not (self.variance >= 0.0):
            raise ValueError(f"variance must be non-negative, got {self.variance}")
        if not (self.mean_return > 0.0):
            raise ValueError(f"mean_return must be positive, got {self.mean_return}")

    @property
    def effective_return_memory(self) -> float:
        return self.memory if self.return_memory is None else self.return_memory

    @property
    def volatility(self) -> float:
        return math.sqrt(self.variance)


def update(estimator: EwmaEstimator, price_prev: float, price_new: float) -> EwmaEstimator:
    """Fold one price observation into the estimator.

    Args:
        estimator: beliefs before the observation.
        price_prev: last period's price, > 0.
        price_new: this period's price, > 0.

    Returns:
        A new estimator. The variance residual uses the just-updated mean.
    """
    if not (price_prev > 0.0) or not (price_new > 0.0):
        raise ValueError(f"prices must be positive, got {price_prev} -> {price_new}")
    ratio = price_new / price_prev
    log_ret = math.log(ratio)
    g = estimator.effective_return_memory
    d = estimator.memory
    mean_return = (1.0 - g) * estimator.mean_return + g * ratio
    mean_log = (1.0 - d) * estimator.mean_log + d * log_ret
    dev = log_ret - mean_log
    variance = (1.0 - d) * estimator.variance + d * dev * dev
    return replace(estimator, mean_return=mean_return, mean_log=mean_log, variance=variance)


def stablecoin_estimators(
    prices: Sequence[float] | Iterable[float],
    mean_log0: float,
    variance0: float,
    memory: float,
) -> list[tuple[float, float]]:
    """Run the mean/variance recursion along a coin price series.

    Entry 0 holds the provided initial values; entry t the beliefs after
    observing prices[t]. Useful for rating the stability of a realized coin
    price path with the same filter the speculator applies to collateral.

    Args:
        prices: positive price series, at least one element.
        mean_log0: initial log-return mean.
        variance0: initial variance, >= 0.
        memory: EWMA weight in [0, 1].

    Returns:
        List of (mean_log, variance) pairs, one per price.
    """
    est = EwmaEstimator(memory=memory, mean_return=1.0, mean_log=mean_log0, variance=variance0)
    out: list[tuple[float, float]] = []
    prev: float | None = None
    for p in prices:
        if not (p > 0.0):
            raise ValueError(f"prices must be positive, got {p}")
        if prev is None:
            out.append((est.mean_log, est.variance))
        else:
            est = update(est, prev, p)
            out.append((est.mean_log, est.variance))
        prev = p
    if not out:
        raise ValueError("prices must contain at least one element")
    return out
