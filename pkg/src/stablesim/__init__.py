"""Deterministic, seedable Monte Carlo simulator of a collateral-backed
stablecoin market: closed-form clearing, risk-constrained supply decisions,
deleveraging spirals, failure-time statistics, and liquidation squeezes."""

__version__ = "0.1.0"

from .analytics import (
    EnsembleSummary,
    HeatmapTable,
    NoCommonFailuresError,
    SteadyStateOracle,
    TooShortError,
    heatmap,
    oracle_coin_price,
    oracle_mean_log,
    oracle_mu_sigma,
    oracle_supply,
    realized_volatility,
    relative_msd,
)
from .attacks import (
    AttackError,
    AttackPlan,
    AttackResult,
    MarketFailedError,
    NoProfitableAttackError,
    OversoldExitError,
    SpiralRow,
    optimize_attack,
    run_attack,
    run_spiral,
)
from .core import (
    ClearingInputs,
    FailureReason,
    FixedDollarDemand,
    HolderState,
    HolderWeightsDemand,
    MarketParams,
    SpeculatorState,
    StatusTag,
    SystemStatus,
    derive_clearing_inputs,
    holder_value,
    leverage,
)
from .decision import (
    Regime,
    StepDecision,
    clearing_price,
    decide,
    objective,
    settle,
    unconstrained_optimum,
)
from .expectations import EwmaEstimator, stablecoin_estimators, update
from .risk import (
    DegenerateSigmaError,
    FeasibleInterval,
    Generalized,
    RiskNeutral,
    VaRHeavyTail,
    VaRNormal,
    alpha_from_quantile_heavytail,
    alpha_from_quantile_normal,
    constraint_interval,
    is_maintainable,
    lambda_tilde,
    lambda_tilde_uncapped,
    max_deleverage,
)
from .simulate import (
    Constant,
    Normal,
    PathRecord,
    SimConfig,
    SimState,
    StepRow,
    StudentT,
    initial_state,
    run_ensemble,
    run_path,
    sample_return,
    step,
)

__all__ = [
    "__version__",
    "AttackError",
    "AttackPlan",
    "AttackResult",
    "ClearingInputs",
    "Constant",
    "DegenerateSigmaError",
    "EnsembleSummary",
    "EwmaEstimator",
    "FailureReason",
    "FeasibleInterval",
    "FixedDollarDemand",
    "Generalized",
    "HeatmapTable",
    "HolderState",
    "HolderWeightsDemand",
    "MarketFailedError",
    "MarketParams",
    "NoCommonFailuresError",
    "NoProfitableAttackError",
    "Normal",
    "OversoldExitError",
    "PathRecord",
    "Regime",
    "RiskNeutral",
    "SimConfig",
    "SimState",
    "SpeculatorState",
    "SpiralRow",
    "StatusTag",
    "SteadyStateOracle",
    "StepDecision",
    "StepRow",
    "StudentT",
    "SystemStatus",
    "TooShortError",
    "VaRHeavyTail",
    "VaRNormal",
    "alpha_from_quantile_heavytail",
    "alpha_from_quantile_normal",
    "clearing_price",
    "constraint_interval",
    "decide",
    "derive_clearing_inputs",
    "heatmap",
    "holder_value",
    "initial_state",
    "is_maintainable",
    "lambda_tilde",
    "lambda_tilde_uncapped",
    "leverage",
    "max_deleverage",
    "objective",
    "optimize_attack",
    "oracle_coin_price",
    "oracle_mean_log",
    "oracle_mu_sigma",
    "oracle_supply",
    "realized_volatility",
    "relative_msd",
    "run_attack",
    "run_ensemble",
    "run_path",
    "run_spiral",
    "sample_return",
    "settle",
    "stablecoin_estimators",
    "step",
    "unconstrained_optimum",
    "update",
]
