"""Config parsing, output layout, and command exit codes."""

import csv
import json
import math

import pytest

from stablesim import (
    Constant,
    FixedDollarDemand,
    Generalized,
    HolderWeightsDemand,
    RiskNeutral,
    StudentT,
    VaRHeavyTail,
    VaRNormal,
)
from stablesim.cli import (
    STRATEGIES,
    ConfigError,
    RunDir,
    config_to_dict,
    main,
    parse_config,
    strategy_from_name,
)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestParseConfig:
    def test_empty_gives_headline_defaults(self):
        cfg = parse_config({})
        assert isinstance(cfg.params.demand, FixedDollarDemand)
        assert cfg.params.demand.dollars == 100.0
        assert isinstance(cfg.risk, RiskNeutral)
        assert cfg.params.liquidation_ratio == 1.5
        assert cfg.params.return_memory == 0.1
        assert cfg.init_ether == 400.0
        assert cfg.init_liabilities == 100.0
        assert cfg.init_exp_return == 1.00583
        assert cfg.horizon == 1000
        assert cfg.n_paths == 10000
        assert isinstance(cfg.return_model, StudentT)

    def test_full_document(self):
        cfg = parse_config(
            {
                "beta": 1.25,
                "gamma": 0.2,
                "delta": 0.3,
                "demand": {"mode": "fixed_dollar", "dollars": 50.0},
                "strategy": {"variant": "generalized", "alpha": 0.02, "cyclicality": -0.5},
                "returns": {"model": "normal", "mu": 0.001, "sigma": 0.02},
                "n0": 300.0,
                "L0": 80.0,
                "r0": 1.001,
                "horizon": 200,
                "paths": 64,
                "seed": 9,
            }
        )
        assert cfg.params.liquidation_ratio == 1.25
        assert cfg.params.variance_memory == 0.3
        assert cfg.params.demand.dollars == 50.0
        assert cfg.risk == Generalized(alpha=0.02, cyclicality=-0.5)
        assert cfg.return_model.sigma == 0.02
        assert cfg.master_seed == 9

    def test_dict_round_trip_is_a_fixpoint(self):
        doc = config_to_dict(parse_config({"strategy": "VaRM.01", "paths": 7}))
        assert config_to_dict(parse_config(doc)) == doc

    def test_strategy_names(self):
        assert parse_config({"strategy": "VaRN.1"}).risk == VaRNormal(0.1)
        assert parse_config({"strategy": "RN"}).risk == RiskNeutral()
        assert strategy_from_name("VaRM.1") == VaRHeavyTail(0.1)
        with pytest.raises(ConfigError):
            strategy_from_name("martingale")

    def test_strategy_objects(self):
        cfg = parse_config({"strategy": {"variant": "var_heavytail", "quantile": 0.05}})
        assert cfg.risk == VaRHeavyTail(0.05)
        cfg = parse_config({"strategy": {"variant": "risk_neutral"}})
        assert cfg.risk == RiskNeutral()

    def test_returns_models(self):
        cfg = parse_config({"returns": {"model": "constant", "gross": 1.01}})
        assert cfg.return_model == Constant(1.01)
        cfg = parse_config({"returns": {"model": "student_t", "df": 5.0}})
        assert cfg.return_model.df == 5.0

    def test_holder_weights_mode(self):
        cfg = parse_config({"demand": {"mode": "holder_weights"}, "weight_coin": 0.25})
        assert isinstance(cfg.params.demand, HolderWeightsDemand)
        assert cfg.holder_weight_coin == 0.25

    def test_unknown_keys_fail_loudly(self):
        with pytest.raises(ConfigError, match="betta"):
            parse_config({"betta": 1.5})
        with pytest.raises(ConfigError, match="config.demand"):
            parse_config({"demand": {"mode": "fixed_dollar", "dollar": 100}})
        with pytest.raises(ConfigError, match="config.strategy"):
            parse_config({"strategy": {"variant": "var_normal", "q": 0.1}})

    def test_type_errors(self):
        with pytest.raises(ConfigError, match="expected a number"):
            parse_config({"beta": "1.5"})
        with pytest.raises(ConfigError, match="expected an integer"):
            parse_config({"paths": 12.5})
        with pytest.raises(ConfigError, match="expected an integer"):
            parse_config({"paths": True})
        with pytest.raises(ConfigError):
            parse_config({"demand": {"mode": "auction"}})
        with pytest.raises(ConfigError):
            parse_config({"strategy": {"variant": "momentum"}})
        with pytest.raises(ConfigError):
            parse_config({"returns": {"model": "gbm"}})
        with pytest.raises(ConfigError):
            parse_config([1, 2, 3])

    def test_validation_errors_become_config_errors(self):
        with pytest.raises(ConfigError):
            parse_config({"beta": -1.0})
        with pytest.raises(ConfigError):
            parse_config({"strategy": {"variant": "var_normal", "quantile": 0.5}})
        with pytest.raises(ConfigError):
            parse_config({"returns": {"model": "student_t", "df": 1.5}})

    def test_file_sources(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"paths": 3, "horizon": 5}))
        cfg = parse_config(path)
        assert cfg.n_paths == 3
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            parse_config(bad)


class TestRunDir:
    def test_cell_formatting(self, tmp_path):
        rundir = RunDir(tmp_path / "out")
        rundir.write_rows(
            "cells.csv",
            ["a", "b", "c", "d", "e"],
            [[-0.0, None, math.nan, 1.23456789012, 7]],
        )
        header, row = read_csv(tmp_path / "out" / "cells.csv")
        assert row == ["0", "", "nan", "1.23456789", "7"]

    def test_atomic_overwrite_and_cleanup(self, tmp_path):
        rundir = RunDir(tmp_path / "out")
        rundir.write_text("a.txt", "one")
        rundir.write_text("a.txt", "two")
        assert (tmp_path / "out" / "a.txt").read_text() == "two"
        assert not list((tmp_path / "out").glob("*.tmp"))
        rundir.cleanup()
        assert not (tmp_path / "out" / "a.txt").exists()


class TestCommands:
    def test_version_and_usage_exit_codes(self, capsys):
        assert main(["--version"]) == 0
        assert main([]) == 1
        assert main(["simulate", "--bogus-flag"]) == 1
        capsys.readouterr()

    def test_simulate_writes_summary_and_manifest(self, tmp_path):
        out = tmp_path / "run"
        code = main(["simulate", "--paths", "5", "--horizon", "20", "--out", str(out)])
        assert code == 0
        rows = read_csv(out / "summary.csv")
        assert rows[0] == ["path", "stop_time", "stop_reason", "realized_vol",
                           "min_pD", "max_pD", "n_steps"]
        assert len(rows) == 6
        assert [r[0] for r in rows[1:]] == ["0", "1", "2", "3", "4"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["tool"] == "stablesim"
        assert manifest["command"] == "simulate"
        assert manifest["outputs"] == ["summary.csv"]
        assert manifest["config"]["paths"] == 5
        assert manifest["master_seed"] == 0

    def test_simulate_trace_layout(self, tmp_path):
        out = tmp_path / "run"
        code = main(["simulate", "--paths", "2", "--horizon", "6", "--trace",
                     "--seed", "4", "--out", str(out)])
        assert code == 0
        trace = read_csv(out / "traces" / "path_00001.csv")
        assert trace[0] == ["t", "pE", "pD", "delta", "L", "n",
                            "leverage", "lambda_tilde", "regime"]
        assert trace[1][0] == "0"
        assert trace[1][3] == ""  # no trade at t = 0
        assert len(trace) == 8  # header + t=0 + 6 steps

    def test_simulate_strategy_override(self, tmp_path):
        out = tmp_path / "run"
        code = main(["simulate", "--paths", "2", "--horizon", "5",
                     "--strategy", "VaRN.1", "--out", str(out)])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["strategy"] == {"variant": "var_normal", "quantile": 0.1}

    def test_simulate_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"paths": 3, "horizon": 8, "strategy": "AC1"}))
        out = tmp_path / "run"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        assert len(read_csv(out / "summary.csv")) == 4

    def test_simulate_bad_inputs_exit_one(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        assert main(["simulate", "--strategy", "bogus", "--out", out]) == 1
        assert main(["simulate", "--price-script", "85,abc", "--out", out]) == 1
        assert main(["simulate", "--seed", "-3", "--out", out]) == 1
        err = capsys.readouterr().err
        assert "error:" in err

    def test_simulate_runtime_failure_cleans_up(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "strategy": {"variant": "generalized", "alpha": 0.01, "cyclicality": -0.5},
            "sigma0": 0.0,
            "paths": 1,
            "horizon": 5,
        }))
        out = tmp_path / "run"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 2
        assert not (out / "summary.csv").exists()
        assert not (out / "manifest.json").exists()
        capsys.readouterr()

    def test_replay_table1(self, tmp_path):
        out = tmp_path / "t1"
        assert main(["replay-table1", "--out", str(out)]) == 0
        rows = read_csv(out / "table1.csv")
        assert rows[0] == ["t", "pE", "delta", "L", "pD", "n"]
        assert len(rows) == 5
        assert rows[1][2] == ""  # no supply change at t = 0

    def test_replay_table2(self, tmp_path):
        out = tmp_path / "t2"
        assert main(["replay-table2", "--out", str(out)]) == 0
        rows = read_csv(out / "table2.csv")
        assert rows[0] == ["t", "pE", "flow", "demand", "delta", "L", "pD", "n"]
        assert len(rows) == 5
        result = json.loads((out / "result.json").read_text())
        assert result["profit"] == pytest.approx(0.083, abs=1e-12)
        assert result["return_pct"] == pytest.approx(8.3, abs=0.3)

    def test_replay_table2_oversold_exits_two(self, tmp_path, capsys):
        out = tmp_path / "t2"
        code = main(["replay-table2", "--exit-dollars", "50", "--out", str(out)])
        assert code == 2
        assert not (out / "table2.csv").exists()
        assert not (out / "result.json").exists()
        capsys.readouterr()

    def test_attack_optimize_profitable(self, tmp_path):
        out = tmp_path / "atk"
        assert main(["attack-optimize", "--out", str(out)]) == 0
        plan = json.loads((out / "plan.json").read_text())
        assert plan["profitable"] is True
        assert plan["return_pct"] > 13.0
        trace = read_csv(out / "attack_trace.csv")
        assert len(trace) == 4  # header + three steps

    def test_attack_optimize_unprofitable_still_succeeds(self, tmp_path):
        out = tmp_path / "atk"
        code = main(["attack-optimize", "--price-script", "85,85,85,85", "--out", str(out)])
        assert code == 0
        plan = json.loads((out / "plan.json").read_text())
        assert plan["profitable"] is False
        assert not (out / "attack_trace.csv").exists()

    def test_steady_state_constant_returns(self, tmp_path):
        out = tmp_path / "oracle"
        assert main(["steady-state", "--r-hat", "1.0", "--horizon", "5", "--out", str(out)]) == 0
        rows = read_csv(out / "oracle.csv")
        assert rows[0] == ["t", "supply", "coin_price", "mu_bar", "sigma_sq_bar"]
        assert len(rows) == 7
        for row in rows[1:]:
            assert float(row[1]) == 100.0
            assert float(row[2]) == 1.0
            assert float(row[3]) == 0.0
            assert float(row[4]) == 0.0

    def test_sweep_memory_axis(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", "--axis", "memory", "--values", "0.1,0.3",
                     "--strategy", "VaRN.1", "--paths", "10", "--horizon", "20",
                     "--bins", "5", "--out", str(out)])
        assert code == 0
        heat = read_csv(out / "heatmap.csv")
        assert heat[0] == ["x_value", "bin_lo", "bin_hi", "count"]
        pct = read_csv(out / "percentiles.csv")
        assert pct[0] == ["x_value", "p50", "p90", "p99"]
        assert {r[0] for r in pct[1:]} == {"0.1", "0.3"}
        assert not (out / "msd.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["axis"] == "memory"

    def test_sweep_strategies_axis(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", "--axis", "strategies", "--paths", "10",
                     "--horizon", "20", "--bins", "5", "--out", str(out)])
        assert code == 0
        pct = read_csv(out / "percentiles.csv")
        assert {r[0] for r in pct[1:]} == set(STRATEGIES)
        msd = read_csv(out / "msd.csv")
        assert msd[0] == ["strategy", "metric", "msd_pct"]
        vol_rows = {r[0] for r in msd[1:] if r[1] == "volatility"}
        assert vol_rows == set(STRATEGIES) - {"RN"}

    def test_sweep_bad_values_exit_one(self, tmp_path, capsys):
        out = str(tmp_path / "sweep")
        assert main(["sweep", "--axis", "memory", "--values", "a,b", "--out", out]) == 1
        capsys.readouterr()
