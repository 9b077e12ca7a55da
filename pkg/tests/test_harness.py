import csv
import os

import pytest
import yaml

from collab_bandit.cli import main
from collab_bandit.harness import (
    AGGREGATE_COLUMNS,
    TRIAL_COLUMNS,
    ConfigError,
    ExperimentConfig,
    InstanceSpec,
    LowerBoundParams,
    config_from_dict,
    lb_check_suite,
    load_config,
    run_experiment,
)

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def _write(tmp_path, raw, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


def _small(kind="batched", **extra):
    raw = {"experiment": kind, "instance": {"hard": {"level": 1, "sign": 1}}, "T": 2000, "trials": 5, "seed": 3}
    if kind != "tradeoff-sweep":
        raw["lambda_grid"] = 2
    raw.update(extra)
    return raw


def test_shipped_configs_parse():
    for name in sorted(os.listdir(CONFIG_DIR)):
        cfg = load_config(os.path.join(CONFIG_DIR, name))
        assert cfg.trials >= 1


def test_config_errors():
    with pytest.raises(ConfigError):
        config_from_dict({"experiment": "nope", "T": 10})
    with pytest.raises(ConfigError):
        config_from_dict(_small(trials=0))
    with pytest.raises(ConfigError):
        config_from_dict(_small(bogus=1))
    with pytest.raises(ConfigError):
        config_from_dict({**_small(), "instance": {"means": [0.5], "hard": {"level": 1}}})
    with pytest.raises(ConfigError):
        config_from_dict(_small("tradeoff-sweep", K=4))
    with pytest.raises(ConfigError):
        config_from_dict(_small("tradeoff-sweep", R_grid=[2], lambda_grid=3))
    with pytest.raises(ConfigError):
        config_from_dict(_small("tradeoff-sweep", R_grid=[40]))
    with pytest.raises(ConfigError):
        config_from_dict({**_small(), "lower_bound": {"gamma": 1}})


def test_unreadable_and_unwritable(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = config_from_dict(_small(out=str(blocker / "sub")))
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_overrides(tmp_path):
    path = _write(tmp_path, _small())
    cfg = load_config(path, trials=9, master_seed=None, experiment="collab-reduction")
    assert cfg.trials == 9 and cfg.master_seed == 3 and cfg.experiment == "collab-reduction"


@pytest.mark.parametrize("kind", ["batched", "collab-reduction", "no-comm-baseline"])
def test_csv_schema_and_status(tmp_path, kind):
    cfg = config_from_dict(_small(kind, K=3, out=str(tmp_path / kind)))
    res = run_experiment(cfg)
    assert res.ok and res.exit_status == 0
    with open(tmp_path / kind / "trials.csv", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TRIAL_COLUMNS
    assert len(rows) == 1 + cfg.trials
    with open(tmp_path / kind / "aggregate.csv", encoding="utf-8", newline="") as fh:
        agg = list(csv.reader(fh))
    assert tuple(agg[0]) == AGGREGATE_COLUMNS
    raw = (tmp_path / kind / "trials.csv").read_bytes()
    assert b"\r" not in raw
    assert "status: ok" in (tmp_path / kind / "summary.txt").read_text(encoding="utf-8")


def test_same_seed_byte_identical(tmp_path):
    for out in ("a", "b"):
        run_experiment(config_from_dict(_small(trials=1, out=str(tmp_path / out))))
    for name in ("trials.csv", "aggregate.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_thread_count_does_not_change_output(tmp_path):
    for threads in (1, 4):
        run_experiment(config_from_dict(_small("collab-reduction", K=2, trials=12, threads=threads, out=str(tmp_path / str(threads)))))
    for name in ("trials.csv", "aggregate.csv"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "4" / name).read_bytes()


def test_sweep_runs_both_signs(tmp_path):
    raw = _small("tradeoff-sweep", K=2, T=1024, R_grid=[2, 4], out=str(tmp_path / "s"))
    raw["instance"] = {"hard": {"level": 1}}
    res = run_experiment(config_from_dict(raw))
    labels = [(r.R, r.lambda_grid) for r in res.rows]
    assert labels == [(2, 2048**0.5)] * 2 + [(4, 2048**0.25)] * 2
    assert all(r.max_rounds <= r.R for r in res.rows)
    assert {c.name for c in res.checks} >= {"worst-of-pair regret non-increasing in R"}


def test_failed_assertion_gives_nonzero_exit(tmp_path):
    # corrupting the per-step bound coefficient must make the lb suite fail
    raw = {
        "experiment": "lb-checks", "K": 4, "T": 2**14, "trials": 10, "out": str(tmp_path / "lb"),
        "lower_bound": {"step_bound_coeff": 4.0, "mc_trials": 2000},
    }
    path = _write(tmp_path, raw)
    assert main(["run", "--config", str(path)]) == 1
    summary = (tmp_path / "lb" / "summary.txt").read_text(encoding="utf-8")
    assert "level=1 A=I1+ B=I1- arm=1 outcome=1" in summary
    assert (tmp_path / "lb" / "checks.csv").exists()


def test_lb_suite_default_family_passes():
    cfg = ExperimentConfig("lb-checks", T=2**14, K=4, trials=40, lower_bound=LowerBoundParams(mc_trials=5000))
    checks = lb_check_suite(cfg)
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]


def test_lb_suite_single_level_family():
    cfg = ExperimentConfig("lb-checks", T=4, K=1, trials=4, lower_bound=LowerBoundParams(mc_trials=100))
    checks = {c.name: c for c in lb_check_suite(cfg)}
    assert checks["event E Monte Carlo"].passed
    assert "degenerate" in checks["event E Monte Carlo"].detail


def test_cli_config_error_exit(tmp_path, capsys):
    path = _write(tmp_path, {"experiment": "batched"})
    assert main(["run", "--config", str(path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_run(tmp_path, capsys):
    path = _write(tmp_path, _small())
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o"), "--trials", "3", "--seed", "4"]) == 0
    assert "experiment: batched" in capsys.readouterr().out
    with open(tmp_path / "o" / "trials.csv", encoding="utf-8") as fh:
        assert len(fh.readlines()) == 4


def test_instance_spec_build():
    assert [i.label for i in InstanceSpec(level=2).build(4.0)] == ["I2+", "I2-"]
    assert InstanceSpec(means=(0.1, 0.2)).build(4.0)[0].means.tolist() == [0.1, 0.2]
