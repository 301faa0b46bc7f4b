"""Path simulation: collateral returns in, coin price dynamics out.

Each path is a pure function of (config, path_index): collateral returns are
pre-drawn from a counter-based generator keyed by the master seed and the
path index, so results never depend on worker count or scheduling. The
per-step loop runs on plain floats; the public single-step API walks the
same arithmetic through the typed state objects and produces bit-identical
rows (tests pin this).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .core import (
    ClearingInputs,
    FailureReason,
    FixedDollarDemand,
    HolderState,
    MarketParams,
    SpeculatorState,
    SystemStatus,
    derive_clearing_inputs,
)
from .decision import _FAILED, Regime, StepDecision, _decide_core, decide, settle
from .expectations import EwmaEstimator, update
from .risk import DegenerateSigmaError, RiskConfig, RiskNeutral, _resolve


@dataclass(frozen=True)
class StudentT:
    """Heavy-tailed log returns: drift + scale * T_df / sqrt(df / (df - 2)).

    scale is the stationary standard deviation of the log return; the raw
    t variate is rescaled by its own stdev so df only shapes the tails.
    """

    df: float = 3.0
    scale: float = 0.027925
    drift: float = 0.0

    def __post_init__(self) -> None:
        if not (self.df > 2.0):
            raise ValueError(f"df must exceed 2 for a finite variance, got {self.df}")
        if not (self.scale >= 0.0):
            raise ValueError(f"scale must be non-negative, got {self.scale}")


@dataclass(frozen=True)
class Normal:
    """Gaussian log returns with the given mean and standard deviation."""

    mu: float = 0.0
    sigma: float = 0.027925

    def __post_init__(self) -> None:
        if not (self.sigma >= 0.0):
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")


@dataclass(frozen=True)
class Constant:
    """Deterministic gross return each period; the no-noise benchmark."""

    gross: float = 1.00583

    def __post_init__(self) -> None:
        if not (self.gross > 0.0):
            raise ValueError(f"gross must be positive, got {self.gross}")


ReturnModel = Union[StudentT, Normal, Constant]

DEFAULT_RETURN_MODEL = StudentT()


def _path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, path_index])))


def _gross_array(model: ReturnModel, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw a full horizon of gross returns in one call."""
    if isinstance(model, Constant):
        return np.full(count, model.gross)
    if isinstance(model, Normal):
        return np.exp(rng.normal(model.mu, model.sigma, count))
    if isinstance(model, StudentT):
        factor = model.scale / math.sqrt(model.df / (model.df - 2.0))
        return np.exp(model.drift + factor * rng.standard_t(model.df, count))
    raise TypeError(f"unknown return model: {model!r}")


def sample_return(model: ReturnModel, rng: np.random.Generator) -> float:
    """Draw one gross return. Paths pre-draw whole horizons instead; this is
    the single-draw utility for callers composing their own loops."""
    return float(_gross_array(model, rng, 1)[0])


@dataclass(frozen=True)
class StepRow:
    """One executed step of a path, in trace order."""

    step: int
    collateral_price: float
    coin_price: float  # nan when the step failed before trading
    supply_change: float
    liabilities: float
    ether: float
    leverage: float  # constraint-scaled, post-trade
    risk_threshold: float  # uncapped speculator cap, before the min with 1
    regime: Regime


@dataclass(frozen=True)
class PathRecord:
    """Outcome of one simulated path."""

    path_index: int
    steps: tuple[StepRow, ...]  # empty unless the path was traced
    n_steps: int  # steps actually executed
    stop_time: int | None  # failing step, None if the path survived
    stop_reason: FailureReason | None
    realized_vol: float  # stdev of coin-price log returns; nan below 2 returns
    min_coin_price: float
    max_coin_price: float
    initial_coin_price: float


@dataclass(frozen=True)
class SimConfig:
    """Complete description of a simulation run.

    Initial beliefs and balances default to the headline calibration: a
    fixed 100-dollar demand market with collateral expected to earn 0.583%
    per period at 2.79% volatility.
    """

    params: MarketParams = MarketParams()
    risk: RiskConfig = RiskNeutral()
    init_ether: float = 400.0  # speculator collateral units
    init_liabilities: float = 100.0  # outstanding coins at t = 0
    init_exp_return: float = 1.00583
    init_exp_log_return: float = 0.00162
    init_exp_sigma: float = 0.027925  # standard deviation, not variance
    init_collateral_price: float = 1.0
    init_holder_ether: float = 400.0  # holder collateral; feeds demand in holder-weights mode
    holder_weight_coin: float = 0.5  # holder-weights mode only
    horizon: int = 1000
    n_paths: int = 10000
    master_seed: int = 0
    price_script: tuple[float, ...] | None = None  # overrides the return model; entry 0 is t = 0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be at least 1, got {self.n_paths}")
        if self.master_seed < 0:
            raise ValueError(f"master_seed must be non-negative, got {self.master_seed}")
        if not (self.init_liabilities > 0.0):
            raise ValueError(f"init_liabilities must be positive, got {self.init_liabilities}")
        if not (self.init_ether >= 0.0):
            raise ValueError(f"init_ether must be non-negative, got {self.init_ether}")
        if not (self.init_exp_sigma >= 0.0):
            raise ValueError(f"init_exp_sigma must be non-negative, got {self.init_exp_sigma}")
        if not (self.init_collateral_price > 0.0):
            raise ValueError(
                f"init_collateral_price must be positive, got {self.init_collateral_price}"
            )
        if not (0.0 <= self.holder_weight_coin <= 1.0):
            raise ValueError(f"holder_weight_coin must lie in [0, 1], got {self.holder_weight_coin}")
        if self.price_script is not None:
            if len(self.price_script) < 2:
                raise ValueError("price_script needs at least an initial price and one step")
            if any(not (p > 0.0) for p in self.price_script):
                raise ValueError("price_script must be entirely positive")

    @property
    def return_model(self) -> ReturnModel:
        return self.params.return_model or DEFAULT_RETURN_MODEL

    @property
    def effective_horizon(self) -> int:
        return len(self.price_script) - 1 if self.price_script is not None else self.horizon


@dataclass(frozen=True)
class SimState:
    """Typed state between steps of the public single-step API."""

    time: int
    speculator: SpeculatorState
    holder: HolderState
    status: SystemStatus
    collateral_price: float
    coin_price: float  # last clearing price
    floor_breaches: int = 0  # consecutive closes below the floor


def initial_state(config: SimConfig) -> SimState:
    """State at t = 0; the initial coin price clears a zero supply change."""
    speculator = SpeculatorState(
        ether=config.init_ether,
        liabilities=config.init_liabilities,
        exp_return=config.init_exp_return,
        exp_log_return=config.init_exp_log_return,
        exp_variance=config.init_exp_sigma**2,
    )
    wc = config.holder_weight_coin if isinstance(config.params.demand, FixedDollarDemand) is False else 1.0
    holder = HolderState(
        ether=config.init_holder_ether,
        coins=config.init_liabilities,
        weight_coin=wc,
        weight_ether=1.0 - wc,
    )
    inputs = derive_clearing_inputs(speculator, holder, config.init_collateral_price, config.params)
    denom = -inputs.neg_free_supply
    coin_price = inputs.demand / denom if denom > 0.0 else math.nan
    return SimState(
        time=0,
        speculator=speculator,
        holder=holder,
        status=SystemStatus.normal(),
        collateral_price=config.init_collateral_price,
        coin_price=coin_price,
    )


def step(state: SimState, new_collateral_price: float, config: SimConfig) -> tuple[SimState, StepRow]:
    """Advance one period: reveal the price, update beliefs, decide, settle.

    Failure is absorbing; stepping a failed state raises. The returned row
    is bit-identical to what run_path records for the same inputs.
    """
    if state.status.failed:
        raise ValueError("market already failed; steps after failure are undefined")
    params = config.params
    estimator = EwmaEstimator(
        memory=params.variance_memory,
        mean_return=state.speculator.exp_return,
        mean_log=state.speculator.exp_log_return,
        variance=state.speculator.exp_variance,
        return_memory=params.return_memory,
    )
    estimator = update(estimator, state.collateral_price, new_collateral_price)
    speculator = replace(
        state.speculator,
        exp_return=estimator.mean_return,
        exp_log_return=estimator.mean_log,
        exp_variance=estimator.variance,
    )
    inputs = derive_clearing_inputs(speculator, state.holder, new_collateral_price, params)
    decision, status = decide(inputs, speculator, config.risk, params.liquidation_ratio)
    t = state.time + 1
    resolved = _resolve(config.risk)
    if resolved is None:
        risk_threshold = 1.0
    else:
        alpha, cyc = resolved
        sig = math.sqrt(speculator.exp_variance)
        risk_threshold = math.exp(speculator.exp_log_return - alpha * sig**cyc)
    if status.failed:
        row = StepRow(
            step=t,
            collateral_price=new_collateral_price,
            coin_price=math.nan,
            supply_change=0.0,
            liabilities=speculator.liabilities,
            ether=speculator.ether,
            leverage=_leverage_of(speculator.liabilities, speculator.ether, new_collateral_price, params.liquidation_ratio),
            risk_threshold=risk_threshold,
            regime=decision.regime,
        )
        new_state = replace(
            state,
            time=t,
            speculator=speculator,
            status=status,
            collateral_price=new_collateral_price,
            coin_price=math.nan,
        )
        return (new_state, row)
    speculator, holder = settle(speculator, state.holder, decision, new_collateral_price)
    breaches = state.floor_breaches + 1 if decision.coin_price < params.price_floor else 0
    if breaches >= params.price_floor_patience:
        status = SystemStatus.failure(FailureReason.PRICE_FLOOR)
    row = StepRow(
        step=t,
        collateral_price=new_collateral_price,
        coin_price=decision.coin_price,
        supply_change=decision.supply_change,
        liabilities=speculator.liabilities,
        ether=speculator.ether,
        leverage=_leverage_of(speculator.liabilities, speculator.ether, new_collateral_price, params.liquidation_ratio),
        risk_threshold=risk_threshold,
        regime=decision.regime,
    )
    new_state = SimState(
        time=t,
        speculator=speculator,
        holder=holder,
        status=status,
        collateral_price=new_collateral_price,
        coin_price=decision.coin_price,
        floor_breaches=breaches,
    )
    return (new_state, row)


def _leverage_of(liabilities: float, ether: float, price: float, ratio: float) -> float:
    if liabilities == 0.0:
        return 0.0
    return ratio * liabilities / (ether * price)


def run_path(config: SimConfig, path_index: int, trace: bool = False) -> PathRecord:
    """Simulate one path to its horizon or failure.

    Args:
        config: full run description.
        path_index: which path; combined with the master seed it determines
            every draw, independent of any other path.
        trace: keep per-step rows (memory scales with the horizon).

    Returns:
        PathRecord with summary statistics and, when traced, the rows.
    """
    params = config.params
    ratio_req = params.liquidation_ratio
    gmem = params.return_memory
    dmem = params.variance_memory
    fixed = isinstance(params.demand, FixedDollarDemand)
    fixed_dollars = params.demand.dollars if fixed else 0.0
    floor = params.price_floor
    patience = params.price_floor_patience
    resolved = _resolve(config.risk)
    neutral = resolved is None
    alpha, cyc = resolved if resolved is not None else (0.0, 0.0)
    decide_core = _decide_core

    script = config.price_script
    if script is not None:
        horizon = len(script) - 1
        gross = None
        price0 = script[0]
    else:
        horizon = config.horizon
        rng = _path_rng(config.master_seed, path_index)
        gross = _gross_array(config.return_model, rng, horizon).tolist()
        price0 = config.init_collateral_price

    ether = config.init_ether
    liabilities = config.init_liabilities
    exp_ret = config.init_exp_return
    exp_log = config.init_exp_log_return
    exp_var = config.init_exp_sigma * config.init_exp_sigma
    holder_ether = config.init_holder_ether
    holder_coins = liabilities
    weight_coin = 1.0 if fixed else config.holder_weight_coin

    price = price0
    if fixed:
        denom0 = liabilities
        coin_price0 = fixed_dollars / denom0
    else:
        y0 = weight_coin * holder_coins - liabilities
        coin_price0 = (weight_coin * holder_ether * price) / -y0 if y0 < 0.0 else math.nan

    prev_coin_price = coin_price0
    if math.isfinite(coin_price0):
        min_cp = max_cp = coin_price0
    else:
        min_cp, max_cp = math.inf, -math.inf
    vol_n = 0
    vol_mean = 0.0
    vol_m2 = 0.0
    rows: list[StepRow] = []
    stop_time: int | None = None
    stop_reason: FailureReason | None = None
    breaches = 0

    for t in range(1, horizon + 1):
        new_price = script[t] if script is not None else price * gross[t - 1]
        ratio = new_price / price
        log_ret = math.log(ratio)
        exp_ret = (1.0 - gmem) * exp_ret + gmem * ratio
        exp_log = (1.0 - dmem) * exp_log + dmem * log_ret
        dev = log_ret - exp_log
        exp_var = (1.0 - dmem) * exp_var + dmem * dev * dev
        price = new_price

        if fixed:
            x = fixed_dollars
            y = -liabilities
        else:
            x = weight_coin * holder_ether * price
            y = weight_coin * holder_coins - liabilities
        z = ether * price

        if neutral:
            risk_threshold = 1.0
            cap = 1.0
        else:
            sig = math.sqrt(exp_var)
            if sig == 0.0 and cyc < 0.0:
                raise DegenerateSigmaError(
                    "volatility is zero and the cyclicality exponent is negative"
                )
            risk_threshold = math.exp(exp_log - alpha * sig**cyc)
            cap = risk_threshold if risk_threshold < 1.0 else 1.0

        delta, coin_price, regime, flag = decide_core(
            x, y, z, liabilities, exp_ret, cap, ratio_req
        )

        if flag == _FAILED:
            stop_time = t
            stop_reason = FailureReason.INFEASIBLE_LIQUIDATION
            if trace:
                rows.append(
                    StepRow(
                        step=t,
                        collateral_price=price,
                        coin_price=math.nan,
                        supply_change=0.0,
                        liabilities=liabilities,
                        ether=ether,
                        leverage=_leverage_of(liabilities, ether, price, ratio_req),
                        risk_threshold=risk_threshold,
                        regime=regime,
                    )
                )
            break

        flow = delta * coin_price / price
        ether = ether + flow
        if ether < 0.0:
            if ether < -1e-9 * max(1.0, ether - flow):
                raise ValueError(f"settlement drives speculator collateral negative: {ether}")
            ether = 0.0
        liabilities = liabilities + delta
        if liabilities < 0.0:
            if liabilities < -1e-9 * max(1.0, liabilities - delta):
                raise ValueError(f"settlement drives liabilities negative: {liabilities}")
            liabilities = 0.0
        holder_ether = holder_ether - flow
        holder_coins = liabilities

        if coin_price > 0.0 and prev_coin_price > 0.0:
            lr = math.log(coin_price / prev_coin_price)
            vol_n += 1
            d1 = lr - vol_mean
            vol_mean += d1 / vol_n
            vol_m2 += d1 * (lr - vol_mean)
        if math.isfinite(coin_price):
            if coin_price < min_cp:
                min_cp = coin_price
            if coin_price > max_cp:
                max_cp = coin_price
        prev_coin_price = coin_price

        if trace:
            rows.append(
                StepRow(
                    step=t,
                    collateral_price=price,
                    coin_price=coin_price,
                    supply_change=delta,
                    liabilities=liabilities,
                    ether=ether,
                    leverage=_leverage_of(liabilities, ether, price, ratio_req),
                    risk_threshold=risk_threshold,
                    regime=regime,
                )
            )

        if coin_price < floor:
            breaches += 1
            if breaches >= patience:
                stop_time = t
                stop_reason = FailureReason.PRICE_FLOOR
                break
        else:
            breaches = 0

    executed = stop_time if stop_time is not None else horizon
    realized_vol = math.sqrt(vol_m2 / (vol_n - 1)) if vol_n >= 2 else math.nan
    if not (math.isfinite(min_cp) or math.isfinite(max_cp)):
        min_cp = max_cp = math.nan
    return PathRecord(
        path_index=path_index,
        steps=tuple(rows),
        n_steps=executed,
        stop_time=stop_time,
        stop_reason=stop_reason,
        realized_vol=realized_vol,
        min_coin_price=min_cp,
        max_coin_price=max_cp,
        initial_coin_price=coin_price0,
    )


def _run_chunk(args: tuple[SimConfig, int, int, bool]) -> list[PathRecord]:
    config, start, stop, trace = args
    return [run_path(config, i, trace) for i in range(start, stop)]


def _worker_cap() -> int | None:
    raw = os.environ.get("STABLESIM_THREADS", "").strip()
    if not raw:
        return None
    cap = int(raw)
    if cap < 1:
        raise ValueError(f"STABLESIM_THREADS must be a positive integer, got {raw!r}")
    return cap


def run_ensemble(
    config: SimConfig, workers: int | None = None, trace: bool = False
) -> list[PathRecord]:
    """Simulate all paths of a config, in path-index order.

    workers = 1 (the default) runs in-process. More workers split the index
    range into contiguous chunks across processes; because each path seeds
    its own generator, results are identical for every worker count. The
    STABLESIM_THREADS environment variable caps the worker count.

    Returns:
        One PathRecord per path, index-ordered.
    """
    n = config.n_paths
    w = 1 if workers is None else workers
    if w < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    cap = _worker_cap()
    if cap is not None:
        w = min(w, cap)
    w = min(w, n)
    if w == 1:
        return [run_path(config, i, trace) for i in range(n)]
    bounds = [(n * k) // w for k in range(w + 1)]
    chunks = [(config, bounds[k], bounds[k + 1], trace) for k in range(w)]
    records: list[PathRecord] = []
    with ProcessPoolExecutor(max_workers=w) as pool:
        for part in pool.map(_run_chunk, chunks):
            records.extend(part)
    return records
