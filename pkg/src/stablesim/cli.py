"""Command-line interface: simulate, sweep, replay, optimize, oracle curves.

Every run writes one output directory containing a manifest (tool version,
resolved config, seed, outputs, wall time) next to its data files. Files are
written atomically and partial outputs are removed if a command fails.
Numbers in CSV output carry 9 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .analytics import (
    EnsembleSummary,
    NoCommonFailuresError,
    SteadyStateOracle,
    heatmap,
    oracle_coin_price,
    oracle_mu_sigma,
    oracle_supply,
    relative_msd,
)
from .attacks import (
    AttackError,
    AttackPlan,
    NoProfitableAttackError,
    optimize_attack,
    run_attack,
    run_spiral,
)
from .core import FixedDollarDemand, HolderWeightsDemand, MarketParams
from .risk import Generalized, RiskConfig, RiskNeutral, VaRHeavyTail, VaRNormal
from .simulate import Constant, Normal, ReturnModel, SimConfig, StudentT, run_ensemble

STRATEGIES: dict[str, RiskConfig] = {
    "VaRN.1": VaRNormal(0.1),
    "VaRN.01": VaRNormal(0.01),
    "VaRM.1": VaRHeavyTail(0.1),
    "VaRM.01": VaRHeavyTail(0.01),
    "AC1": Generalized(alpha=0.01, cyclicality=-0.5),
    "AC2": Generalized(alpha=0.02, cyclicality=-0.5),
    "RN": RiskNeutral(),
}

SPIRAL_SCRIPT = (85.0, 83.0, 82.0, 81.0)
ATTACK_SCRIPT = (85.0, 85.0, 82.0, 82.0)


class ConfigError(ValueError):
    """A config file or flag value is malformed; maps to exit code 1."""


def _fmt(value: float) -> str:
    return format(value, ".9g")


def _cell(value: float | int | str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    if value == 0.0:
        value = 0.0  # never print negative zero
    return _fmt(value)


def strategy_from_name(name: str) -> RiskConfig:
    try:
        return STRATEGIES[name]
    except KeyError:
        raise ConfigError(
            f"unknown strategy {name!r}; choose one of {', '.join(STRATEGIES)}"
        ) from None


def _expect(mapping: dict[str, Any], path: str, allowed: set[str]) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _number(mapping: dict[str, Any], key: str, path: str, default: float) -> float:
    v = mapping.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(mapping: dict[str, Any], key: str, path: str, default: int) -> int:
    v = mapping.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    return v


def _parse_strategy(raw: Any, path: str) -> RiskConfig:
    if isinstance(raw, str):
        return strategy_from_name(raw)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a roster name or an object, got {raw!r}")
    variant = raw.get("variant")
    try:
        if variant == "var_normal":
            _expect(raw, path, {"variant", "quantile"})
            return VaRNormal(_number(raw, "quantile", path, 0.1))
        if variant == "var_heavytail":
            _expect(raw, path, {"variant", "quantile"})
            return VaRHeavyTail(_number(raw, "quantile", path, 0.1))
        if variant == "generalized":
            _expect(raw, path, {"variant", "alpha", "cyclicality"})
            return Generalized(
                alpha=_number(raw, "alpha", path, 0.01),
                cyclicality=_number(raw, "cyclicality", path, -0.5),
            )
        if variant == "risk_neutral":
            _expect(raw, path, {"variant"})
            return RiskNeutral()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}.variant: expected one of var_normal, var_heavytail, generalized, risk_neutral, got {variant!r}")


def _parse_returns(raw: Any, path: str) -> ReturnModel:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object, got {raw!r}")
    model = raw.get("model")
    try:
        if model == "student_t":
            _expect(raw, path, {"model", "df", "scale", "drift"})
            return StudentT(
                df=_number(raw, "df", path, 3.0),
                scale=_number(raw, "scale", path, 0.027925),
                drift=_number(raw, "drift", path, 0.0),
            )
        if model == "normal":
            _expect(raw, path, {"model", "mu", "sigma"})
            return Normal(mu=_number(raw, "mu", path, 0.0), sigma=_number(raw, "sigma", path, 0.027925))
        if model == "constant":
            _expect(raw, path, {"model", "gross"})
            return Constant(gross=_number(raw, "gross", path, 1.00583))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}.model: expected one of student_t, normal, constant, got {model!r}")


_TOP_KEYS = {
    "beta", "gamma", "delta", "demand", "strategy", "returns",
    "n0", "L0", "r0", "mu0", "sigma0", "pE0", "holder_ether", "weight_coin",
    "price_floor", "floor_patience", "horizon", "paths", "seed",
}


def parse_config(source: str | os.PathLike[str] | dict[str, Any]) -> SimConfig:
    """Build a SimConfig from a JSON file path or an already-parsed mapping.

    Every key is optional; an empty object yields the headline calibration.
    Unknown keys are rejected so typos fail loudly rather than silently
    running defaults.

    Raises:
        ConfigError: unreadable file, bad JSON, unknown key, or a value
            that fails validation.
    """
    if isinstance(source, dict):
        raw: Any = source
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {source}: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {source} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object, got {type(raw).__name__}")
    _expect(raw, "config", _TOP_KEYS)

    demand_raw = raw.get("demand", {"mode": "fixed_dollar"})
    if not isinstance(demand_raw, dict):
        raise ConfigError(f"config.demand: expected an object, got {demand_raw!r}")
    mode = demand_raw.get("mode", "fixed_dollar")
    try:
        if mode == "fixed_dollar":
            _expect(demand_raw, "config.demand", {"mode", "dollars"})
            demand = FixedDollarDemand(_number(demand_raw, "dollars", "config.demand", 100.0))
        elif mode == "holder_weights":
            _expect(demand_raw, "config.demand", {"mode"})
            demand = HolderWeightsDemand()
        else:
            raise ConfigError(
                f"config.demand.mode: expected fixed_dollar or holder_weights, got {mode!r}"
            )
        returns = _parse_returns(raw["returns"], "config.returns") if "returns" in raw else None
        params = MarketParams(
            liquidation_ratio=_number(raw, "beta", "config", 1.5),
            return_memory=_number(raw, "gamma", "config", 0.1),
            variance_memory=_number(raw, "delta", "config", 0.1),
            demand=demand,
            return_model=returns,
            price_floor=_number(raw, "price_floor", "config", 0.5),
            price_floor_patience=_integer(raw, "floor_patience", "config", 1),
        )
        risk = _parse_strategy(raw["strategy"], "config.strategy") if "strategy" in raw else RiskNeutral()
        sigma0 = _number(raw, "sigma0", "config", 0.027925)
        return SimConfig(
            params=params,
            risk=risk,
            init_ether=_number(raw, "n0", "config", 400.0),
            init_liabilities=_number(raw, "L0", "config", 100.0),
            init_exp_return=_number(raw, "r0", "config", 1.00583),
            init_exp_log_return=_number(raw, "mu0", "config", 0.00162),
            init_exp_sigma=sigma0,
            init_collateral_price=_number(raw, "pE0", "config", 1.0),
            init_holder_ether=_number(raw, "holder_ether", "config", 400.0),
            holder_weight_coin=_number(raw, "weight_coin", "config", 0.5),
            horizon=_integer(raw, "horizon", "config", 1000),
            n_paths=_integer(raw, "paths", "config", 10000),
            master_seed=_integer(raw, "seed", "config", 0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"config: {exc}") from None


def config_to_dict(config: SimConfig) -> dict[str, Any]:
    """Resolved-config snapshot for the manifest; inverse shape of parse_config."""
    params = config.params
    if isinstance(params.demand, FixedDollarDemand):
        demand: dict[str, Any] = {"mode": "fixed_dollar", "dollars": params.demand.dollars}
    else:
        demand = {"mode": "holder_weights"}
    risk = config.risk
    if isinstance(risk, VaRNormal):
        strategy: dict[str, Any] = {"variant": "var_normal", "quantile": risk.quantile}
    elif isinstance(risk, VaRHeavyTail):
        strategy = {"variant": "var_heavytail", "quantile": risk.quantile}
    elif isinstance(risk, Generalized):
        strategy = {"variant": "generalized", "alpha": risk.alpha, "cyclicality": risk.cyclicality}
    else:
        strategy = {"variant": "risk_neutral"}
    model = config.return_model
    if isinstance(model, StudentT):
        returns: dict[str, Any] = {"model": "student_t", "df": model.df, "scale": model.scale, "drift": model.drift}
    elif isinstance(model, Normal):
        returns = {"model": "normal", "mu": model.mu, "sigma": model.sigma}
    else:
        returns = {"model": "constant", "gross": model.gross}
    return {
        "beta": params.liquidation_ratio,
        "gamma": params.return_memory,
        "delta": params.variance_memory,
        "demand": demand,
        "strategy": strategy,
        "returns": returns,
        "n0": config.init_ether,
        "L0": config.init_liabilities,
        "r0": config.init_exp_return,
        "mu0": config.init_exp_log_return,
        "sigma0": config.init_exp_sigma,
        "pE0": config.init_collateral_price,
        "holder_ether": config.init_holder_ether,
        "weight_coin": config.holder_weight_coin,
        "price_floor": params.price_floor,
        "floor_patience": params.price_floor_patience,
        "horizon": config.horizon,
        "paths": config.n_paths,
        "seed": config.master_seed,
    }


class RunDir:
    """Output directory with atomic writes and failure cleanup."""

    def __init__(self, root: str | os.PathLike[str]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def write_text(self, name: str, text: str) -> None:
        target = self.root / name
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_name(target.name + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, target)
        self.written.append(name)

    def write_rows(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
        self.write_text(name, buf.getvalue())

    def cleanup(self) -> None:
        for name in self.written:
            try:
                (self.root / name).unlink()
            except OSError:
                pass
        self.written.clear()


def _write_manifest(rundir: RunDir, command: str, config: SimConfig | None, started: float,
                    extra: dict[str, Any] | None = None) -> None:
    manifest: dict[str, Any] = {
        "tool": "stablesim",
        "version": __version__,
        "command": command,
        "outputs": sorted(rundir.written),
        "duration_seconds": round(time.monotonic() - started, 3),
    }
    if config is not None:
        manifest["config"] = config_to_dict(config)
        manifest["master_seed"] = config.master_seed
    if extra:
        manifest.update(extra)
    rundir.write_text("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _parse_script(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"--price-script must be comma-separated numbers, got {text!r}") from None
    if len(values) < 2:
        raise ConfigError("--price-script needs at least two prices (t = 0 and one step)")
    if any(not (v > 0.0) for v in values):
        raise ConfigError("--price-script prices must be positive")
    return values


def _replay_config(script: tuple[float, ...]) -> SimConfig:
    """Benchmark starting point: steady-state books, frozen beliefs."""
    return SimConfig(
        params=MarketParams(
            liquidation_ratio=1.5,
            return_memory=0.0,
            variance_memory=0.0,
            demand=FixedDollarDemand(100.0),
        ),
        risk=RiskNeutral(),
        init_ether=1.8,
        init_liabilities=100.583,
        init_exp_return=1.00583,
        init_exp_log_return=0.00162,
        init_exp_sigma=0.027925,
        init_collateral_price=script[0],
        horizon=len(script) - 1,
        n_paths=1,
        master_seed=0,
    )


def _apply_overrides(config: SimConfig, args: argparse.Namespace) -> SimConfig:
    import dataclasses

    updates: dict[str, Any] = {}
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError(f"--seed must be non-negative, got {args.seed}")
        updates["master_seed"] = args.seed
    if getattr(args, "paths", None) is not None:
        updates["n_paths"] = args.paths
    if getattr(args, "horizon", None) is not None:
        updates["horizon"] = args.horizon
    if getattr(args, "strategy", None) is not None:
        updates["risk"] = strategy_from_name(args.strategy)
    if getattr(args, "price_script", None) is not None:
        updates["price_script"] = _parse_script(args.price_script)
    try:
        return dataclasses.replace(config, **updates) if updates else config
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _summary_rows(summaries: Sequence[tuple[int, Any]]) -> list[list[Any]]:
    rows = []
    for idx, rec in summaries:
        rows.append(
            [
                idx,
                rec.stop_time,
                rec.stop_reason.value if rec.stop_reason is not None else None,
                rec.realized_vol if math.isfinite(rec.realized_vol) else None,
                rec.min_coin_price,
                rec.max_coin_price,
                rec.n_steps,
            ]
        )
    return rows


_SUMMARY_HEADER = ["path", "stop_time", "stop_reason", "realized_vol", "min_pD", "max_pD", "n_steps"]
_TRACE_HEADER = ["t", "pE", "pD", "delta", "L", "n", "leverage", "lambda_tilde", "regime"]


def _trace_rows(config: SimConfig, record: Any) -> list[list[Any]]:
    rows: list[list[Any]] = [
        [0, config.price_script[0] if config.price_script else config.init_collateral_price,
         record.initial_coin_price, None, config.init_liabilities, config.init_ether,
         config.params.liquidation_ratio * config.init_liabilities
         / (config.init_ether * (config.price_script[0] if config.price_script else config.init_collateral_price)),
         None, None]
    ]
    for r in record.steps:
        rows.append(
            [r.step, r.collateral_price, r.coin_price, r.supply_change, r.liabilities,
             r.ether, r.leverage, r.risk_threshold, r.regime.value]
        )
    return rows


def _default_workers() -> int:
    return os.cpu_count() or 1


def _cmd_simulate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    config = parse_config(args.config) if args.config else parse_config({})
    config = _apply_overrides(config, args)
    rundir = RunDir(args.out)
    try:
        records = run_ensemble(config, workers=_default_workers(), trace=args.trace)
        rundir.write_rows(
            "summary.csv", _SUMMARY_HEADER, _summary_rows([(r.path_index, r) for r in records])
        )
        if args.trace:
            for rec in records:
                rundir.write_rows(
                    f"traces/path_{rec.path_index:05d}.csv", _TRACE_HEADER, _trace_rows(config, rec)
                )
        _write_manifest(rundir, "simulate", config, started)
    except Exception:
        rundir.cleanup()
        raise
    failures = sum(1 for r in records if r.stop_time is not None)
    print(f"simulated {len(records)} paths ({failures} failed) -> {rundir.root}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    started = time.monotonic()
    base = parse_config(args.config) if args.config else parse_config({})
    base = _apply_overrides(base, args)
    import dataclasses

    rundir = RunDir(args.out)
    try:
        ensembles: list[tuple[object, EnsembleSummary]] = []
        if args.axis == "strategies":
            for name, risk in STRATEGIES.items():
                cfg = dataclasses.replace(base, risk=risk)
                records = run_ensemble(cfg, workers=_default_workers())
                ensembles.append((name, EnsembleSummary.from_records(name, records)))
        else:
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}") from None
            if not values:
                raise ConfigError("--values must list at least one memory weight")
            for v in values:
                params = dataclasses.replace(base.params, return_memory=v, variance_memory=v)
                cfg = dataclasses.replace(base, params=params)
                records = run_ensemble(cfg, workers=_default_workers())
                label = _fmt(v)
                ensembles.append((label, EnsembleSummary.from_records(label, records)))

        table = heatmap(ensembles, args.metric, bins=args.bins)
        rundir.write_rows(
            "heatmap.csv", ["x_value", "bin_lo", "bin_hi", "count"], list(table.histogram_rows)
        )
        pct_header = ["x_value"] + [f"p{int(q)}" for q in table.percentiles]
        rundir.write_rows("percentiles.csv", pct_header, list(table.percentile_rows))
        if args.axis == "strategies":
            by_name = dict(ensembles)
            baseline = by_name.get("RN")
            msd_rows: list[list[Any]] = []
            if baseline is not None:
                for name, summary in ensembles:
                    if name == "RN":
                        continue
                    msd_rows.append([name, "volatility", relative_msd(summary, baseline, "volatility")])
                    try:
                        msd_rows.append([name, "stop_time", relative_msd(summary, baseline, "stop_time")])
                    except NoCommonFailuresError:
                        pass
            rundir.write_rows("msd.csv", ["strategy", "metric", "msd_pct"], msd_rows)
        _write_manifest(rundir, "sweep", base, started, {"axis": args.axis, "metric": args.metric})
    except Exception:
        rundir.cleanup()
        raise
    print(f"swept {args.axis} ({len(ensembles)} ensembles) -> {rundir.root}")
    return 0


def _cmd_replay_table1(args: argparse.Namespace) -> int:
    started = time.monotonic()
    script = _parse_script(args.price_script) if args.price_script else SPIRAL_SCRIPT
    config = _replay_config(script)
    rundir = RunDir(args.out)
    try:
        rows = run_spiral(script, config)
        out = [
            [r.step, r.collateral_price,
             r.supply_change if math.isfinite(r.supply_change) else None,
             r.liabilities, r.coin_price, r.ether]
            for r in rows
        ]
        rundir.write_rows("table1.csv", ["t", "pE", "delta", "L", "pD", "n"], out)
        _write_manifest(rundir, "replay-table1", config, started)
    except Exception:
        rundir.cleanup()
        raise
    print(f"replayed deleveraging spiral ({len(rows) - 1} steps) -> {rundir.root}")
    return 0


def _cmd_replay_table2(args: argparse.Namespace) -> int:
    started = time.monotonic()
    script = _parse_script(args.price_script) if args.price_script else ATTACK_SCRIPT
    config = _replay_config(script)
    try:
        plan = AttackPlan(
            entry_time=args.entry_time,
            entry_dollars=args.entry_dollars,
            exit_time=args.exit_time,
            exit_dollars=args.exit_dollars,
            price_script=script,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rundir = RunDir(args.out)
    try:
        result = run_attack(plan, config)
        base = config.params.demand.dollars
        rows: list[list[Any]] = [
            [0, script[0], None, base, None, config.init_liabilities,
             base / config.init_liabilities, config.init_ether]
        ]
        for i, r in enumerate(result.rows):
            flow = result.flow_by_step[i]
            rows.append(
                [r.step, r.collateral_price, flow if flow != 0.0 else None,
                 result.demand_by_step[i], r.supply_change, r.liabilities,
                 r.coin_price, r.ether]
            )
        rundir.write_rows("table2.csv", ["t", "pE", "flow", "demand", "delta", "L", "pD", "n"], rows)
        rundir.write_text(
            "result.json",
            json.dumps(
                {
                    "entry_time": plan.entry_time,
                    "entry_dollars": plan.entry_dollars,
                    "exit_time": plan.exit_time,
                    "exit_dollars": plan.exit_dollars,
                    "coins_acquired": result.coins_acquired,
                    "profit": result.profit,
                    "return_pct": result.return_pct,
                    "entry_price": result.entry_price,
                    "pre_exit_price": result.pre_exit_price,
                    "exit_price": result.exit_price,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
        )
        _write_manifest(rundir, "replay-table2", config, started)
    except Exception:
        rundir.cleanup()
        raise
    print(
        f"replayed squeeze: profit {result.profit:.6g} on {plan.entry_dollars:.6g} "
        f"({result.return_pct:.3g}%) -> {rundir.root}"
    )
    return 0


def _cmd_attack_optimize(args: argparse.Namespace) -> int:
    started = time.monotonic()
    script = _parse_script(args.price_script) if args.price_script else ATTACK_SCRIPT
    if args.config:
        config = parse_config(args.config)
        config = _apply_overrides(config, args)
    else:
        config = _replay_config(script)
    rundir = RunDir(args.out)
    try:
        try:
            plan, result = optimize_attack(config, script, args.entry_time, args.exit_time)
        except NoProfitableAttackError as exc:
            rundir.write_text(
                "plan.json",
                json.dumps({"profitable": False, "reason": str(exc)}, indent=2, sort_keys=True) + "\n",
            )
            _write_manifest(rundir, "attack-optimize", config, started)
            print(f"no profitable attack on this script -> {rundir.root}")
            return 0
        rundir.write_text(
            "plan.json",
            json.dumps(
                {
                    "profitable": True,
                    "entry_time": plan.entry_time,
                    "entry_dollars": plan.entry_dollars,
                    "exit_time": plan.exit_time,
                    "exit_dollars": plan.exit_dollars,
                    "profit": result.profit,
                    "return_pct": result.return_pct,
                    "coins_acquired": result.coins_acquired,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
        )
        trace = [
            [r.step, r.collateral_price, r.coin_price, r.supply_change, r.liabilities,
             r.ether, r.leverage, r.risk_threshold, r.regime.value]
            for r in result.rows
        ]
        rundir.write_rows("attack_trace.csv", _TRACE_HEADER, trace)
        _write_manifest(rundir, "attack-optimize", config, started)
    except Exception:
        rundir.cleanup()
        raise
    print(
        f"best injection {plan.entry_dollars:.6g} extracts {plan.exit_dollars:.6g} "
        f"({result.return_pct:.3g}% return) -> {rundir.root}"
    )
    return 0


def _cmd_steady_state(args: argparse.Namespace) -> int:
    started = time.monotonic()
    try:
        oracle = SteadyStateOracle(
            demand_dollars=args.demand,
            exp_gross_return=args.r_hat,
            memory=args.memory,
            init_mean_log=args.mu0,
            init_variance=args.var0,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.horizon < 0:
        raise ConfigError(f"--horizon must be non-negative, got {args.horizon}")
    rundir = RunDir(args.out)
    try:
        rows = []
        for t in range(args.horizon + 1):
            mu, var = oracle_mu_sigma(oracle, t)
            rows.append([t, oracle_supply(oracle, t), oracle_coin_price(oracle, t), mu, var])
        rundir.write_rows("oracle.csv", ["t", "supply", "coin_price", "mu_bar", "sigma_sq_bar"], rows)
        _write_manifest(rundir, "steady-state", None, started)
    except Exception:
        rundir.cleanup()
        raise
    print(f"wrote {len(rows)} oracle rows -> {rundir.root}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablesim",
        description="Deterministic Monte Carlo simulator of a collateral-backed stablecoin market.",
    )
    parser.add_argument("--version", action="version", version=f"stablesim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, default_out: str) -> None:
        p.add_argument("--out", default=default_out, help="output directory")

    p = sub.add_parser("simulate", help="run a Monte Carlo ensemble")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--paths", type=int, help="override the path count")
    p.add_argument("--horizon", type=int, help="override the horizon")
    p.add_argument("--strategy", help="override the risk strategy (roster name)")
    p.add_argument("--price-script", help="comma-separated collateral prices, first is t=0")
    p.add_argument("--trace", action="store_true", help="write per-path trace CSVs (large)")
    add_common(p, "stablesim_simulate")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run ensembles across strategies or memory weights")
    p.add_argument("--axis", choices=["strategies", "memory"], default="strategies")
    p.add_argument("--values", default="0.05,0.1,0.3", help="memory weights for --axis memory")
    p.add_argument("--metric", choices=["volatility", "stop_time"], default="volatility")
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--paths", type=int, help="override the path count")
    p.add_argument("--horizon", type=int, help="override the horizon")
    p.add_argument("--strategy", help="strategy for --axis memory (roster name)")
    add_common(p, "stablesim_sweep")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("replay-table1", help="replay the benchmark deleveraging spiral")
    p.add_argument("--price-script", help="comma-separated collateral prices")
    add_common(p, "stablesim_table1")
    p.set_defaults(func=_cmd_replay_table1)

    p = sub.add_parser("replay-table2", help="replay the benchmark liquidation squeeze")
    p.add_argument("--price-script", help="comma-separated collateral prices")
    p.add_argument("--entry-time", type=int, default=1)
    p.add_argument("--entry-dollars", type=float, default=1.0)
    p.add_argument("--exit-time", type=int, default=3)
    p.add_argument("--exit-dollars", type=float, default=1.083)
    add_common(p, "stablesim_table2")
    p.set_defaults(func=_cmd_replay_table2)

    p = sub.add_parser("attack-optimize", help="search for the most profitable squeeze")
    p.add_argument("--price-script", help="comma-separated collateral prices")
    p.add_argument("--entry-time", type=int, default=1)
    p.add_argument("--exit-time", type=int, default=3)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--strategy", help="override the risk strategy (roster name)")
    add_common(p, "stablesim_attack")
    p.set_defaults(func=_cmd_attack_optimize)

    p = sub.add_parser("steady-state", help="write the closed-form steady-state curves")
    p.add_argument("--demand", type=float, default=100.0)
    p.add_argument("--r-hat", type=float, default=1.00583)
    p.add_argument("--memory", type=float, default=0.1)
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("--var0", type=float, default=0.0)
    p.add_argument("--horizon", type=int, default=60)
    add_common(p, "stablesim_steady")
    p.set_defaults(func=_cmd_steady_state)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point. Returns 0 on success, 1 for usage/config errors, 2 for
    runtime failures."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (AttackError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:  # pragma: no cover - console-script shim
    sys.exit(main())
