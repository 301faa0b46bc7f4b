"""Shared fixtures. The statistical ensembles are expensive (tens of
seconds), so they are computed once per session and shared between the
acceptance checks that consume them; their wall time is recorded so the
runtime budget can be asserted."""

from __future__ import annotations

import dataclasses
import time

import pytest

from stablesim import (
    Constant,
    FixedDollarDemand,
    MarketParams,
    RiskNeutral,
    SimConfig,
    StudentT,
    run_ensemble,
    run_path,
)
from stablesim.cli import STRATEGIES

MASTER_SEED = 7
N_PATHS = 2000
HORIZON = 500
MEMORY_SWEEP = (0.05, 0.1, 0.3)


def statistical_base_config() -> SimConfig:
    return SimConfig(
        params=MarketParams(
            demand=FixedDollarDemand(100.0),
            return_model=StudentT(df=3.0, scale=0.027925, drift=0.0),
        ),
        horizon=HORIZON,
        n_paths=N_PATHS,
        master_seed=MASTER_SEED,
    )


def roster_configs() -> dict[str, SimConfig]:
    base = statistical_base_config()
    return {name: dataclasses.replace(base, risk=risk) for name, risk in STRATEGIES.items()}


def memory_configs() -> dict[float, SimConfig]:
    base = statistical_base_config()
    out = {}
    for mem in MEMORY_SWEEP:
        params = dataclasses.replace(
            base.params, return_memory=mem, variance_memory=mem
        )
        out[mem] = dataclasses.replace(base, params=params, risk=STRATEGIES["VaRN.1"])
    return out


@pytest.fixture(scope="session")
def roster_records():
    """(records by strategy, wall seconds) for the benchmark roster, workers = 1."""
    started = time.monotonic()
    records = {name: run_ensemble(cfg, workers=1) for name, cfg in roster_configs().items()}
    return records, time.monotonic() - started


@pytest.fixture(scope="session")
def memory_records():
    """(records by memory weight, wall seconds) for the memory sweep, workers = 1."""
    started = time.monotonic()
    records = {mem: run_ensemble(cfg, workers=1) for mem, cfg in memory_configs().items()}
    return records, time.monotonic() - started


@pytest.fixture(scope="session")
def theorem_run():
    """The no-shock contraction: constant gross collateral return, frozen
    fixed-point belief, protocol constraint far from binding."""
    cfg = SimConfig(
        params=MarketParams(
            return_memory=0.1,
            variance_memory=0.1,
            demand=FixedDollarDemand(100.0),
            return_model=Constant(1.00583),
        ),
        risk=RiskNeutral(),
        init_ether=400.0,
        init_liabilities=100.0,
        init_exp_return=1.00583,
        init_exp_log_return=0.0,
        init_exp_sigma=0.0,
        init_collateral_price=1.0,
        horizon=60,
        n_paths=1,
        master_seed=0,
    )
    record = run_path(cfg, 0, trace=True)
    return cfg, record
