"""Experiment specs, replication, outputs, CLI."""

import csv
import json
import statistics

import pytest

from mcbandits import cli
from mcbandits.harness import (
    ExperimentSpec,
    SpecValidationError,
    default_checkpoints,
    run_experiment,
)

GOOD = {
    "environment": {
        "K": 3, "m": 2, "means": [0.9, 0.6, 0.3], "horizon": 20000,
    },
    "algorithm": {"name": "alg1", "c_scale": 0.002},
    "experiment": {"replications": 2, "base_seed": 7, "checkpoints": [1024, 20000]},
}


def _toml(data):
    lines = []
    for section, kv in data.items():
        lines.append(f"[{section}]")
        for k, v in kv.items():
            if isinstance(v, str):
                lines.append(f'{k} = "{v}"')
            elif isinstance(v, bool):
                lines.append(f"{k} = {str(v).lower()}")
            elif isinstance(v, list):
                lines.append(f"{k} = {v}")
            else:
                lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)


def test_default_checkpoints():
    assert default_checkpoints(5000) == [1024, 2048, 4096, 5000]
    assert default_checkpoints(4096) == [1024, 2048, 4096]
    assert default_checkpoints(100) == [100]


def test_validation_collects_all_violations():
    bad = {
        "environment": {"K": 3, "means": [0.5, 0.5]},  # no m/horizon, K mismatch
        "algorithm": {"name": "bogus"},
        "experiment": {"replications": 0},
    }
    with pytest.raises(SpecValidationError) as ei:
        ExperimentSpec.from_dict(bad)
    msgs = ei.value.violations
    assert len(msgs) >= 5
    assert any("name" in v for v in msgs)
    assert any("replications" in v for v in msgs)
    assert any("means length" in v for v in msgs)


def test_validation_algorithm_specific():
    d = json.loads(json.dumps(GOOD))
    d["algorithm"] = {"name": "alg2", "variant": "a"}  # missing mu_lower
    with pytest.raises(SpecValidationError):
        ExperimentSpec.from_dict(d)
    d["algorithm"] = {"name": "alg2", "variant": "b"}  # fine without mu_lower
    ExperimentSpec.from_dict(d)
    d["algorithm"] = {"name": "more_than_k"}  # m <= K
    with pytest.raises(SpecValidationError):
        ExperimentSpec.from_dict(d)


def test_from_toml_roundtrip(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(_toml(GOOD))
    spec = ExperimentSpec.from_toml(path)
    assert spec.replications == 2
    assert spec.base_seed == 7
    assert spec.seeds() == [7, 8]
    assert spec.checkpoints == [1024, 20000]
    cfg = spec.config(7)
    assert cfg.K == 3 and cfg.m == 2 and cfg.horizon == 20000


def test_reproducibility_and_outputs(tmp_path):
    spec = ExperimentSpec.from_dict(GOOD)
    r1 = run_experiment(spec, out_dir=tmp_path / "a")
    r2 = run_experiment(spec, out_dir=tmp_path / "b")
    assert [row["final_regret"] for row in r1.rows] == \
        [row["final_regret"] for row in r2.rows]
    # schema of results.csv
    with open(tmp_path / "a" / "results.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"replication", "seed", "final_regret",
                            "fixation_round", "success"}
    assert len(rows) == 2
    # checkpoints csv
    with open(tmp_path / "a" / "regret_checkpoints.csv", newline="") as fh:
        cps = list(csv.DictReader(fh))
    assert set(cps[0]) == {"replication", "t", "cumulative_regret"}
    assert len(cps) == 2 * 2
    # aggregates recomputable from rows
    agg = json.load(open(tmp_path / "a" / "aggregates.json"))
    assert agg["regret_mean"] == pytest.approx(
        statistics.fmean(float(r["final_regret"]) for r in rows))
    assert 0.0 <= agg["success_rate"] <= 1.0
    # identical across the two invocations
    assert agg == json.load(open(tmp_path / "b" / "aggregates.json"))


def test_fast_and_slow_paths_agree():
    spec_fast = ExperimentSpec.from_dict(GOOD)
    d = json.loads(json.dumps(GOOD))
    d["experiment"]["fast"] = False
    spec_slow = ExperimentSpec.from_dict(d)
    rf = run_experiment(spec_fast)
    rs = run_experiment(spec_slow)
    for a, b in zip(rf.rows, rs.rows):
        assert a["final_regret"] == pytest.approx(b["final_regret"], abs=1e-6)
        assert a["fixation_round"] == b["fixation_round"]
        assert a["success"] == b["success"]


# ------------------------------------------------------------------- CLI


def test_cli_run_and_exit_codes(tmp_path, capsys):
    path = tmp_path / "exp.toml"
    path.write_text(_toml(GOOD))
    code = cli.main(["run", "--config", str(path), "--out",
                     str(tmp_path / "out")])
    assert code == 0
    agg = json.loads(capsys.readouterr().out)
    assert "regret_mean" in agg
    assert (tmp_path / "out" / "results.csv").exists()


def test_cli_usage_and_validation_errors(tmp_path, capsys):
    assert cli.main([]) == 1
    assert cli.main(["frobnicate"]) == 1
    bad = tmp_path / "bad.toml"
    bad.write_text(_toml({"environment": {"K": 2},
                          "algorithm": {"name": "alg1"}}))
    assert cli.main(["run", "--config", str(bad)]) == 2
    capsys.readouterr()


def test_cli_sweep(tmp_path, capsys):
    path = tmp_path / "exp.toml"
    d = json.loads(json.dumps(GOOD))
    d["experiment"]["replications"] = 1
    path.write_text(_toml(d))
    code = cli.main(["sweep", "--config", str(path),
                     "--param", "environment.horizon",
                     "--values", "10000,20000",
                     "--out", str(tmp_path / "sw")])
    assert code == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 2
    assert [r["environment.horizon"] for r in rows] == [10000, 20000]
    with open(tmp_path / "sw" / "sweep.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 2


def test_cli_verify_nash(capsys):
    code = cli.main(["verify", "--oracle", "nash",
                     "--assignment", "1,2",
                     "--means", "0.9,0.5;0.9,0.5",
                     "--eps", "0.2"])
    assert code == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["is_eps_nash"] is True
    code = cli.main(["verify", "--oracle", "nash",
                     "--assignment", "1,1",
                     "--means", "0.9,0.5;0.9,0.5",
                     "--eps", "0.2"])
    assert code == 3
    capsys.readouterr()


def test_cli_verify_grid_and_probability(capsys):
    assert cli.main(["verify", "--oracle", "interval-grid", "--p", "1.5",
                     "--points", "500"]) == 0
    assert cli.main(["verify", "--oracle", "positive-probability",
                     "--mu", "0.5", "--sigma", "1.0",
                     "--samples", "200000"]) == 0
    capsys.readouterr()


def test_cli_replay_detects_tampering(tmp_path, capsys):
    from mcbandits.engine import run_game
    from mcbandits.harness import build_players

    path = tmp_path / "exp.toml"
    d = json.loads(json.dumps(GOOD))
    d["environment"]["horizon"] = 2000
    d["experiment"]["replications"] = 1
    path.write_text(_toml(d))
    spec = ExperimentSpec.from_toml(path)
    config = spec.config(7)
    players = build_players(spec, config)
    trace = run_game(config, players, regret_mode=spec.regret_mode,
                     record_rounds=True, bulk=False)
    good_csv = tmp_path / "trace.csv"
    trace.to_csv(good_csv)
    assert cli.main(["replay", "--config", str(path), "--seed", "7",
                     "--trace", str(good_csv)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["divergence"] is None
    # tamper with one action
    lines = good_csv.read_text().splitlines()
    parts = lines[42].split(",")
    parts[2] = "3" if parts[2] != "3" else "2"
    lines[42] = ",".join(parts)
    bad_csv = tmp_path / "tampered.csv"
    bad_csv.write_text("\n".join(lines) + "\n")
    assert cli.main(["replay", "--config", str(path), "--seed", "7",
                     "--trace", str(bad_csv)]) == 3
    div = json.loads(capsys.readouterr().out)["divergence"]
    assert div["field"] == "action"
