"""Closed-form oracles and ensemble statistics.

The no-shock market with a frozen return belief contracts its supply toward
demand times the expected gross return, halving the remaining log distance
every period. That gives closed forms for the supply curve, the per-step
coin return, and the EWMA mean/variance a holder would estimate from the
coin price series; simulated paths must match them to high precision, which
is what makes these functions useful as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from .simulate import PathRecord


class TooShortError(ValueError):
    """Raised when a path carries too few coin returns for a statistic."""


class NoCommonFailuresError(ValueError):
    """Raised when a stop-time comparison finds no path failing in both ensembles."""


@dataclass(frozen=True)
class SteadyStateOracle:
    """Parameters of the no-shock contraction toward steady state.

    Supply starts at the demand level and moves half the remaining log
    distance toward demand * exp_gross_return each period, so the coin
    price per-step log return at step t is -2^{-t} * ln(exp_gross_return).
    memory, init_mean_log and init_variance describe the EWMA filter run
    over that coin price series.
    """

    demand_dollars: float = 100.0
    exp_gross_return: float = 1.00583
    memory: float = 0.1  # EWMA weight of the filter being predicted
    init_mean_log: float = 0.0
    init_variance: float = 0.0

    def __post_init__(self) -> None:
        if not (self.demand_dollars > 0.0):
            raise ValueError(f"demand_dollars must be positive, got {self.demand_dollars}")
        if not (self.exp_gross_return > 0.0):
            raise ValueError(f"exp_gross_return must be positive, got {self.exp_gross_return}")
        if not (0.0 <= self.memory <= 1.0):
            raise ValueError(f"memory must lie in [0, 1], got {self.memory}")
        if not (self.init_variance >= 0.0):
            raise ValueError(f"init_variance must be non-negative, got {self.init_variance}")


def oracle_supply(oracle: SteadyStateOracle, t: int) -> float:
    """Outstanding supply after t no-shock periods: D * r^(1 - 2^-t).

    Written with the exponent 1 - 2^-t rather than the ratio of huge powers
    so it stays finite for any t.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return oracle.demand_dollars * oracle.exp_gross_return ** (1.0 - 2.0**-t)


def oracle_coin_price(oracle: SteadyStateOracle, t: int) -> float:
    """Coin price after t no-shock periods: demand over supply."""
    return oracle.demand_dollars / oracle_supply(oracle, t)


def oracle_step_log_return(oracle: SteadyStateOracle, t: int) -> float:
    """Coin-price log return of step t (t >= 1): -2^-t * ln(r)."""
    if t < 1:
        raise ValueError(f"t must be at least 1, got {t}")
    return -(2.0**-t) * math.log(oracle.exp_gross_return)


def oracle_mean_log(oracle: SteadyStateOracle, t: int) -> float:
    """Closed-form EWMA log-return mean after t steps of the contraction."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    d = oracle.memory
    lr = math.log(oracle.exp_gross_return)
    decay = (1.0 - d) ** t
    if d == 0.5:
        return 2.0**-t * (oracle.init_mean_log - 0.5 * t * lr)
    return decay * oracle.init_mean_log - d * (decay - 2.0**-t) / (2.0 * (1.0 - d) - 1.0) * lr


def oracle_mu_sigma(oracle: SteadyStateOracle, t: int) -> tuple[float, float]:
    """Closed-form EWMA (mean, variance) of the coin log returns after t steps.

    The variance is the recursion unrolled exactly:
    var_t = (1-d)^t var_0 + sum_k (1-d)^(t-k) d (mean_k - a_k)^2 with
    a_k the step-k log return and mean_k the *updated* closed-form mean,
    matching the filter's use of the fresh mean in the residual.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    d = oracle.memory
    var = (1.0 - d) ** t * oracle.init_variance
    for k in range(1, t + 1):
        resid = oracle_mean_log(oracle, k) - oracle_step_log_return(oracle, k)
        var += (1.0 - d) ** (t - k) * d * resid * resid
    return (oracle_mean_log(oracle, t), var)


def realized_volatility(path: PathRecord) -> float:
    """Standard deviation of a path's coin-price log returns.

    Traced paths are recomputed from their rows (the initial price counts);
    untraced paths return the accumulated value. Fewer than two usable
    returns raise TooShort.
    """
    if path.steps:
        prices = [path.initial_coin_price]
        prices.extend(row.coin_price for row in path.steps)
        rets = []
        for prev, cur in zip(prices, prices[1:]):
            if prev > 0.0 and cur > 0.0 and math.isfinite(prev) and math.isfinite(cur):
                rets.append(math.log(cur / prev))
        if len(rets) < 2:
            raise TooShortError(f"need at least 2 coin returns, path has {len(rets)}")
        return float(np.std(rets, ddof=1))
    if not math.isfinite(path.realized_vol):
        raise TooShortError("path completed fewer than 2 coin returns")
    return path.realized_vol


@dataclass(frozen=True)
class EnsembleSummary:
    """Per-path outcome arrays of one ensemble, aligned by path index."""

    label: str
    stop_times: np.ndarray  # int64; -1 where the path survived
    realized_vols: np.ndarray  # float64; nan where undefined
    min_coin_prices: np.ndarray
    max_coin_prices: np.ndarray

    @classmethod
    def from_records(cls, label: str, records: Sequence[PathRecord]) -> "EnsembleSummary":
        return cls(
            label=label,
            stop_times=np.array(
                [-1 if r.stop_time is None else r.stop_time for r in records], dtype=np.int64
            ),
            realized_vols=np.array([r.realized_vol for r in records], dtype=np.float64),
            min_coin_prices=np.array([r.min_coin_price for r in records], dtype=np.float64),
            max_coin_prices=np.array([r.max_coin_price for r in records], dtype=np.float64),
        )

    @property
    def n_paths(self) -> int:
        return len(self.stop_times)

    @property
    def failure_rate(self) -> float:
        return float(np.mean(self.stop_times >= 0))

    def vol_percentile(self, q: float) -> float:
        vals = self.realized_vols[np.isfinite(self.realized_vols)]
        if len(vals) == 0:
            return math.nan
        return float(np.percentile(vals, q))

    @property
    def median_vol(self) -> float:
        return self.vol_percentile(50.0)


Metric = Literal["volatility", "stop_time"]


def _metric_values(summary: EnsembleSummary, metric: Metric) -> np.ndarray:
    if metric == "volatility":
        v = summary.realized_vols
        return v[np.isfinite(v)]
    if metric == "stop_time":
        s = summary.stop_times
        return s[s >= 0].astype(np.float64)
    raise ValueError(f"unknown metric {metric!r}")


def relative_msd(a: EnsembleSummary, b: EnsembleSummary, metric: Metric) -> float:
    """Mean squared per-path difference of a metric, as a percent of b's mean square.

    Paths are paired by index (common random numbers), so the difference
    isolates the strategies rather than the draws. Volatility compares
    paths where both sides have a defined value; stop_time compares paths
    that failed in both ensembles and raises NoCommonFailures when there
    are none.
    """
    if a.n_paths != b.n_paths:
        raise ValueError(f"ensembles differ in size: {a.n_paths} vs {b.n_paths}")
    if metric == "volatility":
        va, vb = a.realized_vols, b.realized_vols
        mask = np.isfinite(va) & np.isfinite(vb)
        if not mask.any():
            raise ValueError("no paths with defined volatility in both ensembles")
    elif metric == "stop_time":
        mask = (a.stop_times >= 0) & (b.stop_times >= 0)
        if not mask.any():
            raise NoCommonFailuresError(
                f"no path failed in both {a.label!r} and {b.label!r}"
            )
        va = a.stop_times.astype(np.float64)
        vb = b.stop_times.astype(np.float64)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    num = float(np.mean((va[mask] - vb[mask]) ** 2))
    den = float(np.mean(vb[mask] ** 2))
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return 100.0 * num / den


@dataclass(frozen=True)
class HeatmapTable:
    """Histogram columns plus percentile rows of one metric across ensembles."""

    metric: str
    histogram_rows: tuple[tuple[object, float, float, int], ...]  # (x, bin_lo, bin_hi, count)
    percentile_rows: tuple[tuple[object, ...], ...]  # (x, value per percentile)
    percentiles: tuple[float, ...]


def heatmap(
    summaries: Mapping[object, EnsembleSummary] | Iterable[tuple[object, EnsembleSummary]],
    metric: Metric,
    bins: int = 40,
    percentiles: Sequence[float] = (50.0, 90.0, 99.0),
) -> HeatmapTable:
    """Histogram a metric over a family of ensembles with shared bin edges.

    Bin edges are common across the x axis so columns are comparable; each
    column's counts sum to the number of paths with a defined metric value.
    Percentile rows use the same per-ensemble values.
    """
    if bins < 1:
        raise ValueError(f"bins must be at least 1, got {bins}")
    items = list(summaries.items()) if isinstance(summaries, Mapping) else list(summaries)
    if not items:
        raise ValueError("at least one ensemble is required")
    values = {x: _metric_values(s, metric) for x, s in items}
    pooled = np.concatenate([v for v in values.values()]) if values else np.array([])
    hist_rows: list[tuple[object, float, float, int]] = []
    if pooled.size:
        lo, hi = float(pooled.min()), float(pooled.max())
        if lo == hi:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, bins + 1)
        for x, vals in values.items():
            counts, _ = np.histogram(vals, bins=edges)
            for b in range(bins):
                hist_rows.append((x, float(edges[b]), float(edges[b + 1]), int(counts[b])))
    pct_rows: list[tuple[object, ...]] = []
    for x, vals in values.items():
        if vals.size:
            pct = [float(np.percentile(vals, q)) for q in percentiles]
        else:
            pct = [math.nan] * len(percentiles)
        pct_rows.append((x, *pct))
    return HeatmapTable(
        metric=metric,
        histogram_rows=tuple(hist_rows),
        percentile_rows=tuple(pct_rows),
        percentiles=tuple(float(q) for q in percentiles),
    )
