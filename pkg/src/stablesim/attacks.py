"""Deleveraging spirals and the liquidation-squeeze attack.

The attack: inject extra coin demand at the entry step (buying coins at the
inflated clearing price), hold while a collateral drop forces the speculator
into a constrained repurchase at rising prices, then dump the position into
the squeezed market. The attacker's exit is sized against the price of the
step before the exit; extraction beyond what the acquired coins would fetch
there is an oversell and rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import FailureReason, FixedDollarDemand
from .decision import _FAILED, _decide_core
from .risk import _resolve
from .simulate import PathRecord, SimConfig, StepRow, run_path


class AttackError(RuntimeError):
    """Base class for attack evaluation failures."""


class OversoldExitError(AttackError):
    """The planned extraction exceeds what the acquired coins cover at the pre-exit price."""


class MarketFailedError(AttackError):
    """The market failed before the attack could complete."""

    def __init__(self, step: int, reason: FailureReason):
        super().__init__(f"market failed at step {step} ({reason.value})")
        self.step = step
        self.reason = reason


class NoProfitableAttackError(AttackError):
    """No demand injection yields positive profit on the given script."""


@dataclass(frozen=True)
class AttackPlan:
    """A fully specified squeeze: when and how much to inject and extract."""

    entry_time: int  # step at which the extra demand arrives, >= 1
    entry_dollars: float  # demand injected and spent on coins at entry
    exit_time: int  # step at which the position is dumped, > entry_time
    exit_dollars: float  # dollars extracted at exit
    price_script: tuple[float, ...]  # collateral prices; entry 0 is t = 0

    def __post_init__(self) -> None:
        if self.entry_time < 1:
            raise ValueError(f"entry_time must be at least 1, got {self.entry_time}")
        if self.exit_time <= self.entry_time:
            raise ValueError(
                f"exit_time must exceed entry_time, got {self.exit_time} <= {self.entry_time}"
            )
        if not (self.entry_dollars >= 0.0):
            raise ValueError(f"entry_dollars must be non-negative, got {self.entry_dollars}")
        if not (self.exit_dollars >= 0.0):
            raise ValueError(f"exit_dollars must be non-negative, got {self.exit_dollars}")
        if len(self.price_script) <= self.exit_time:
            raise ValueError(
                f"price_script must cover step {self.exit_time}, has {len(self.price_script)} entries"
            )
        if any(not (p > 0.0) for p in self.price_script):
            raise ValueError("price_script must be entirely positive")


@dataclass(frozen=True)
class AttackResult:
    """What a plan achieved."""

    coins_acquired: float
    profit: float  # exit_dollars - entry_dollars
    return_pct: float  # 100 * profit / entry_dollars; 0 for a zero entry
    entry_price: float  # clearing price the attacker bought at
    exit_price: float  # clearing price of the exit step
    pre_exit_price: float  # clearing price of the step before exit (sizes the exit)
    rows: tuple[StepRow, ...]  # per-step trace, t = 1 .. exit_time
    demand_by_step: tuple[float, ...]  # dollars of demand cleared each step, t = 1 .. exit_time
    flow_by_step: tuple[float, ...]  # attacker cash in (+) or out (-) each step


def _attack_walk(
    config: SimConfig,
    script: tuple[float, ...],
    entry_time: int,
    entry_dollars: float,
    last_step: int,
    bump_step: int,
    bump_coins: float,
) -> tuple[list[StepRow], list[float], list[float], float]:
    """Walk steps 1..last_step with attacker demand riding from entry_time on.

    bump_step (if within range) additionally offers bump_coins of supply,
    the attacker's dump. Returns (rows, demands, coin prices by step,
    final liabilities). Raises MarketFailed if no feasible change exists.
    """
    if not isinstance(config.params.demand, FixedDollarDemand):
        raise ValueError("attacks are defined on fixed-dollar demand markets")
    params = config.params
    ratio_req = params.liquidation_ratio
    gmem = params.return_memory
    dmem = params.variance_memory
    base = params.demand.dollars
    resolved = _resolve(config.risk)
    alpha, cyc = resolved if resolved is not None else (0.0, 0.0)

    ether = config.init_ether
    liabilities = config.init_liabilities
    exp_ret = config.init_exp_return
    exp_log = config.init_exp_log_return
    exp_var = config.init_exp_sigma * config.init_exp_sigma
    price = script[0]

    rows: list[StepRow] = []
    demands: list[float] = []
    prices: list[float] = []
    for t in range(1, last_step + 1):
        new_price = script[t]
        ratio = new_price / price
        log_ret = math.log(ratio)
        exp_ret = (1.0 - gmem) * exp_ret + gmem * ratio
        exp_log = (1.0 - dmem) * exp_log + dmem * log_ret
        dev = log_ret - exp_log
        exp_var = (1.0 - dmem) * exp_var + dmem * dev * dev
        price = new_price

        x = base + entry_dollars if t >= entry_time else base
        y = -(liabilities + bump_coins) if t == bump_step else -liabilities
        z = ether * price

        if resolved is None:
            risk_threshold = 1.0
            cap = 1.0
        else:
            sig = math.sqrt(exp_var)
            risk_threshold = math.exp(exp_log - alpha * sig**cyc)
            cap = risk_threshold if risk_threshold < 1.0 else 1.0

        delta, coin_price, regime, flag = _decide_core(
            x, y, z, liabilities, exp_ret, cap, ratio_req
        )
        if flag == _FAILED:
            raise MarketFailedError(t, FailureReason.INFEASIBLE_LIQUIDATION)

        flow = delta * coin_price / price
        ether = ether + flow
        if ether < 0.0:
            ether = 0.0
        liabilities = liabilities + delta
        rows.append(
            StepRow(
                step=t,
                collateral_price=price,
                coin_price=coin_price,
                supply_change=delta,
                liabilities=liabilities,
                ether=ether,
                leverage=(ratio_req * liabilities / (ether * price) if liabilities > 0.0 else 0.0),
                risk_threshold=risk_threshold,
                regime=regime,
            )
        )
        demands.append(x)
        prices.append(coin_price)
    return (rows, demands, prices, liabilities)


def run_attack(plan: AttackPlan, config: SimConfig) -> AttackResult:
    """Execute a squeeze plan on its price script.

    The attacker's dollars ride as extra demand from entry to exit. At the
    exit step the acquired coins are added to the offered supply and the
    planned dollars leave the market; the recorded demand for that step
    nets the extraction out.

    Raises:
        OversoldExit: plan.exit_dollars exceeds coins * pre-exit price.
        MarketFailed: the market failed at or before the exit step.
    """
    script = plan.price_script
    rows1, _, prices1, _ = _attack_walk(
        config, script, plan.entry_time, plan.entry_dollars, plan.exit_time - 1, -1, 0.0
    )
    entry_price = prices1[plan.entry_time - 1]
    coins = plan.entry_dollars / entry_price if plan.entry_dollars > 0.0 else 0.0
    pre_exit_price = prices1[plan.exit_time - 2]
    coins_needed = plan.exit_dollars / pre_exit_price if plan.exit_dollars > 0.0 else 0.0
    if coins_needed > coins * (1.0 + 1e-9):
        raise OversoldExitError(
            f"exit needs {coins_needed} coins at the pre-exit price but only {coins} were acquired"
        )
    rows, demands, prices, _ = _attack_walk(
        config, script, plan.entry_time, plan.entry_dollars, plan.exit_time, plan.exit_time, coins
    )
    demands[-1] = demands[-1] - plan.exit_dollars
    flows = [0.0] * plan.exit_time
    flows[plan.entry_time - 1] = plan.entry_dollars
    flows[plan.exit_time - 1] = -plan.exit_dollars
    profit = plan.exit_dollars - plan.entry_dollars
    return AttackResult(
        coins_acquired=coins,
        profit=profit,
        return_pct=(100.0 * profit / plan.entry_dollars) if plan.entry_dollars > 0.0 else 0.0,
        entry_price=entry_price,
        exit_price=prices[-1],
        pre_exit_price=pre_exit_price,
        rows=tuple(rows),
        demand_by_step=tuple(demands),
        flow_by_step=tuple(flows),
    )


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_attack(
    config: SimConfig,
    price_script: tuple[float, ...],
    entry_time: int,
    exit_time: int,
) -> tuple[AttackPlan, AttackResult]:
    """Find the most profitable injection for fixed entry and exit steps.

    For a given injection the binding extraction is coins * pre-exit price,
    so profit is a scalar function of the injection alone. It rises toward
    the level that kills the market outright (beyond which evaluation
    fails), so a coarse grid brackets the best feasible injection and a
    golden-section pass refines it, scoring failed evaluations as -inf.

    Returns:
        (best plan, its executed result).

    Raises:
        NoProfitableAttack: every injection loses money on this script.
    """
    if exit_time <= entry_time:
        raise ValueError(f"exit_time must exceed entry_time, got {exit_time} <= {entry_time}")
    if not isinstance(config.params.demand, FixedDollarDemand):
        raise ValueError("attacks are defined on fixed-dollar demand markets")
    script = tuple(float(p) for p in price_script)
    base = config.params.demand.dollars

    def profit_of(injection: float) -> float:
        if injection <= 0.0:
            return -math.inf
        try:
            _, _, prices, _ = _attack_walk(
                config, script, entry_time, injection, exit_time - 1, -1, 0.0
            )
        except MarketFailedError:
            return -math.inf
        coins = injection / prices[entry_time - 1]
        return coins * prices[exit_time - 2] - injection

    # Constraint-pinned configurations make profit exactly zero in real
    # arithmetic; anything below this floor is numerical noise, not profit.
    profit_floor = 1e-9 * base
    grid = np.linspace(0.0, base / 2.0, 129)[1:]
    scores = [profit_of(d) for d in grid]
    best_i = int(np.argmax(scores))
    best_x, best_f = float(grid[best_i]), scores[best_i]
    if not (best_f > profit_floor):
        raise NoProfitableAttackError("no injection on the grid yields positive profit")

    a = float(grid[best_i - 1]) if best_i > 0 else 0.0
    b = float(grid[best_i + 1]) if best_i + 1 < len(grid) else float(grid[-1])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = profit_of(c), profit_of(d)
    for _ in range(200):
        if b - a <= 1e-10 * base:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = profit_of(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = profit_of(d)
        for x, f in ((c, fc), (d, fd)):
            if f > best_f:
                best_x, best_f = x, f
    if not (best_f > profit_floor):
        raise NoProfitableAttackError("refined search found no profitable injection")
    plan = AttackPlan(
        entry_time=entry_time,
        entry_dollars=best_x,
        exit_time=exit_time,
        exit_dollars=best_x + best_f,
        price_script=script,
    )
    return (plan, run_attack(plan, config))


@dataclass(frozen=True)
class SpiralRow:
    """One step of a scripted deleveraging run, including the starting state."""

    step: int
    collateral_price: float
    supply_change: float  # nan at step 0
    liabilities: float
    coin_price: float
    ether: float


def run_spiral(price_script: tuple[float, ...], config: SimConfig) -> list[SpiralRow]:
    """Replay a collateral price script through the ordinary step dynamics.

    Returns one row per step including the t = 0 starting state. A failing
    step appears with a nan coin price and ends the list.
    """
    script = tuple(float(p) for p in price_script)
    cfg = replace(config, price_script=script)
    record: PathRecord = run_path(cfg, 0, trace=True)
    rows = [
        SpiralRow(
            step=0,
            collateral_price=script[0],
            supply_change=math.nan,
            liabilities=config.init_liabilities,
            coin_price=record.initial_coin_price,
            ether=config.init_ether,
        )
    ]
    for r in record.steps:
        rows.append(
            SpiralRow(
                step=r.step,
                collateral_price=r.collateral_price,
                supply_change=r.supply_change,
                liabilities=r.liabilities,
                coin_price=r.coin_price,
                ether=r.ether,
            )
        )
    return rows
