import csv
import io
import os
import random
from dataclasses import replace

import pytest

from colocsim import cli
from colocsim.harness import (AGGREGATE_HEADER, ConfigError, ExperimentConfig, RunRow, aggregate_rows, attack_run,
                              manifest_text, monte_carlo_e_colocated, parse_config, run_experiment,
                              warmstart_workload)
from colocsim.simulation import RNG_NAME, make_rng


def test_minimal_config_fills_defaults():
    cfg = parse_config("experiment = doubledip_eval\n")
    assert cfg.n_nodes == 100 and cfg.node_capacity == 1024 and cfg.runs == 1000
    assert parse_config("") == ExperimentConfig.defaults("attack")


def test_attacker_list_parses():
    cfg = parse_config("experiment = doubledip_eval\nn_attackers = 5,10,20,30,50  # sweep\n")
    assert cfg.n_attackers == (5, 10, 20, 30, 50)


@pytest.mark.parametrize("text,where", [
    ("foo = 1\n", "line 1"),
    ("runs = 5\nruns = 6\n", "line 2"),
    ("# c\nruns = zero\n", "line 2"),
    ("just words\n", "line 1"),
    ("scheduler = helper,,random\n", "line 1"),
    ("knows_packages = maybe\n", "line 1"),
])
def test_config_errors_name_the_line(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(text)


@pytest.mark.parametrize("text", [
    "runs = 0", "scheduler = fifo", "strategy = M7", "experiment = bake", "background_rate = 1.5",
    "k_functions = 0", "knows_packages = false\nstrategy = M3_1",
])
def test_invalid_values_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_manifest_round_trips():
    cfg = parse_config("experiment = transfer_matrix\nruns = 7\nseed = 9\n")
    text = manifest_text(cfg)
    assert RNG_NAME in text and cfg.config_hash in text
    assert parse_config(text) == cfg


def test_config_hash_ignores_out_dir():
    a = parse_config("runs = 3")
    assert a.config_hash == parse_config("runs = 3\nout_dir = /tmp/x").config_hash
    assert a.config_hash != parse_config("runs = 4").config_hash


def test_rng_streams_independent_and_reproducible():
    assert make_rng(5, 1).integers(1 << 62) == make_rng(5, 1).integers(1 << 62)
    assert make_rng(5, 1).integers(1 << 62) != make_rng(5, 2).integers(1 << 62)


def _read(path):
    with open(path, newline="") as fh:
        return fh.read()


def test_outputs_byte_identical(tmp_path):
    cfg = parse_config(f"experiment = transfer_matrix\nruns = 1\nk_functions = 5\nsave_logs = true\n"
                       f"out_dir = {tmp_path}\n")

    def snapshot():
        run_experiment(cfg)
        files = {}
        for root, _, names in os.walk(tmp_path):
            for name in names:
                path = os.path.join(root, name)
                files[os.path.relpath(path, tmp_path)] = _read(path)
        return files

    first = snapshot()
    assert {"aggregate.csv", "runs.csv", "manifest.txt"} <= set(first)
    assert sum(k.startswith("logs") for k in first) == 16
    assert snapshot() == first


def test_rows_carry_seed_and_hash(tmp_path):
    cfg = parse_config(f"experiment = attack\nruns = 2\nk_functions = 1, 3\nseed = 4\nout_dir = {tmp_path}\n")
    run_experiment(cfg)
    for name in ("aggregate.csv", "runs.csv"):
        rows = list(csv.DictReader(io.StringIO(_read(tmp_path / name))))
        assert rows and all(r["seed"] == "4" and r["config_hash"] == cfg.config_hash for r in rows)
    assert tuple(_read(tmp_path / "aggregate.csv").splitlines()[0].split(",")) == AGGREGATE_HEADER


def test_aggregate_is_mean_of_rows_and_order_free():
    rng = random.Random(0)
    rows = [RunRow("helper", "M1", 5, i, ae=rng.random(), pa=rng.random(), colocated=rng.random() < 0.3)
            for i in range(40)]
    agg = aggregate_rows(rows)[0]
    assert agg.means["ae"] == pytest.approx(sum(r.ae for r in rows) / 40, rel=1e-15)
    assert agg.success_rate == sum(r.colocated for r in rows) / 40
    shuffled = rows[:]
    rng.shuffle(shuffled)
    again = aggregate_rows(shuffled)[0]
    assert again.means == agg.means and again.ses == agg.ses


def test_run_order_does_not_change_results():
    cfg = parse_config("runs = 4\nk_functions = 10")
    forward = [attack_run(cfg, "random", "M1", 10, i) for i in range(4)]
    backward = [attack_run(cfg, "random", "M1", 10, i) for i in reversed(range(4))]
    assert forward == backward[::-1]


def test_fingerprint_recipe():
    rep = run_experiment(parse_config("experiment = fingerprint\nscheduler = openwhisk\nphase_invocations = 500"))
    [(sched, run, fm)] = rep.features
    assert sched == "openwhisk" and fm.as_row() == ("Y", "N", "Y", "N", "N")


def test_warmstart_workload_shape():
    cfg = parse_config("experiment = warmstart_cost\ninvocations = 300\nrounds = 30")
    fns, sched = warmstart_workload(cfg, make_rng(0))
    assert len(fns) == cfg.users * cfg.functions_per_user and len(sched) == 300
    assert [r for r, _ in sched] == sorted(r for r, _ in sched)
    rep = run_experiment(replace(cfg, runs=2))
    assert all(0 < a.means["warm_start_ratio"] < 1 for a in rep.aggregates)


def test_doubledip_recipe_small():
    cfg = parse_config("experiment = doubledip_eval\nruns = 5\nn_attackers = 50\nscheduler = helper")
    rep = run_experiment(cfg)
    assert rep.cell("helper", k=50).runs == 5


def test_oracle_sweep_recipe():
    rep = run_experiment(parse_config("experiment = oracle_sweep\nn_nodes = 10\nalpha = 0, 5\nbeta = 5\nruns = 500"))
    zero, five = rep.oracle_rows
    assert zero["mc_mean"] == 0 and zero["e_colocated"] == 0
    assert abs(five["mc_mean"] - five["e_colocated"]) <= 4 * five["mc_se"]


def test_monte_carlo_single_node():
    assert monte_carlo_e_colocated(1, 2, 1, 10, make_rng(0)) == (1.0, 0.0)


def test_cli_runs_and_writes(tmp_path, capsys):
    assert cli.main(["attack", "--runs", "2", "--seed", "3", "--set", "k_functions=2",
                     "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == ",".join(AGGREGATE_HEADER)
    assert (tmp_path / "manifest.txt").exists()


def test_cli_config_error_exit(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment = attack\nbogus = 1\n")
    assert cli.main(["attack", "--config", str(cfg)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert cli.main(["doubledip", "--config", str(cfg)]) == 2


def test_cli_invariant_exit(capsys):
    # two users with six functions each cannot fit on one single-slot node
    code = cli.main(["warmstart", "--runs", "1", "--set", "n_nodes=1", "--set", "node_capacity=1",
                     "--set", "users=2", "--set", "invocations=50", "--set", "rounds=5"])
    assert code == 3
    assert "simulation failed" in capsys.readouterr().err


def test_cli_metrics_from_saved_logs(tmp_path, capsys):
    assert cli.main(["attack", "--runs", "1", "--set", "k_functions=3", "--set", "save_logs=true",
                     "--set", "scheduler=random", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert cli.main(["metrics", str(tmp_path / "logs")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "log,ae,pa,max_pa,warm_start_ratio,colocated" and len(lines) == 2
    runs = list(csv.DictReader(io.StringIO(_read(tmp_path / "runs.csv"))))
    recomputed = lines[1].split(",")
    assert recomputed[1] == runs[0]["ae"] and recomputed[2] == runs[0]["pa"]


def test_cli_metrics_bad_log(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert cli.main(["metrics", str(bad)]) == 2


def test_help_lists_keys(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    out = capsys.readouterr().out
    assert "background_rate" in out and "doubledip_eval" in out
