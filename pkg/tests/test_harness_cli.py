import csv
import json

import numpy as np
import pytest

from uavedge import harness
from uavedge.cli import main
from uavedge.config import ConfigError, ExperimentConfig, load_config, parse_config_text


def tiny(small_config, **extra):
    return small_config.replace(**{"env.steps_per_episode": 5, "experiment.episodes": 2,
                                   "experiment.eval_episodes": 1, "agent.hidden": (16, 8), **extra})


def read_rows(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# -- config --------------------------------------------------------------------

def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(**{"agent.learning_rate": 0.1})
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(**{"nosuch.key": 1})


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(**{"experiment.n_vehicles": "many"})
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(**{"agent.gamma": 1.5})


def test_config_file_round_trip(tmp_path):
    cfg = ExperimentConfig().replace(**{"experiment.n_vehicles": 7, "agent.hidden": (32, 16)})
    path = tmp_path / "run.cfg"
    path.write_text(cfg.dumps(), encoding="utf-8")
    assert load_config(path) == cfg


def test_config_comments_and_blank_lines():
    entries = parse_config_text("# header\n\nworld.uav_height = 50.0  # metres\n")
    assert entries == {"world.uav_height": 50.0}


def test_defaults_validate():
    cfg = ExperimentConfig().validate()
    assert cfg.experiment.n_vehicles == 10 and cfg.agent.optimizer == "sgd"


# -- harness -----------------------------------------------------------------

def test_metrics_rows_per_step(tmp_path, small_config):
    cfg = tiny(small_config, **{"env.steps_per_episode": 10, "experiment.episodes": 1})
    out = tmp_path / "m.csv"
    harness.run(cfg.replace(**{"experiment.agent": "popular-refresh"}), out)
    rows = read_rows(out)
    assert len(rows) == 10
    assert list(rows[0]) == harness.METRICS_FIELDS
    for r in rows:
        total = float(r["energy_total"])
        parts = float(r["energy_cache"]) + float(r["energy_local"]) + float(r["energy_offload"])
        assert total == pytest.approx(parts, rel=1e-12, abs=0.0)


def test_zero_episodes_writes_header_only(tmp_path, small_config):
    cfg = tiny(small_config, **{"experiment.episodes": 0})
    out = tmp_path / "m.csv"
    harness.run(cfg, out)
    assert out.read_text(encoding="utf-8").splitlines() == [",".join(harness.METRICS_FIELDS)]


def test_training_files_are_byte_identical(tmp_path, small_config):
    cfg = tiny(small_config)
    harness.run(cfg, tmp_path / "a.csv")
    harness.run(cfg, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.episodes.csv").read_bytes() == (tmp_path / "b.episodes.csv").read_bytes()


def test_different_seeds_differ(tmp_path, small_config):
    harness.run(tiny(small_config), tmp_path / "a.csv")
    harness.run(tiny(small_config, **{"experiment.seed": 2}), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()


def test_equal_bandwidth_needs_checkpoint(tmp_path, small_config):
    with pytest.raises(ConfigError):
        harness.run(tiny(small_config, **{"experiment.agent": "equal-bandwidth"}), tmp_path / "m.csv")


def test_sampling_log_shows_cutover(tmp_path, small_config):
    cfg = tiny(small_config, **{"env.steps_per_episode": 40, "experiment.episodes": 3, "agent.batch_size": 16})
    log = tmp_path / "s.csv"
    harness.run(cfg, tmp_path / "m.csv", sampling_log=log)
    rows = read_rows(log)
    assert rows
    cut = 4  # ceil(0.1 * 40)
    assert all(r["differentiated"] == "True" for r in rows if int(r["step"]) < cut)
    assert all(r["differentiated"] == "False" for r in rows if int(r["step"]) >= cut)


def test_sweep_summary_consistent(tmp_path, small_config):
    cfg = tiny(small_config)
    agents = ("ddpg", "random-refresh", "random-offload", "popular-refresh", "equal-bandwidth")
    summary = harness.sweep(cfg, [3, 4], [1], tmp_path, agents)
    rows = read_rows(summary)
    assert len(rows) == 2 * 1 * 5
    for r in rows:
        path = tmp_path / r["metrics"]
        assert path.exists()
        assert float(r["mean_energy"]) == pytest.approx(harness.mean_energy_from_metrics(path), rel=1e-12)


def test_episodes_to_reach():
    r = np.concatenate([np.linspace(0, 1, 50), np.ones(150)])
    k = harness.episodes_to_reach(r, smooth=1)
    assert r[k] >= 0.95 and r[k - 1] < 0.95
    assert harness.episodes_to_reach(np.ones(200)) == 0


def test_episodes_to_reach_negative_levels():
    r = np.concatenate([np.full(50, -2.0), np.full(150, -0.5)])
    assert harness.episodes_to_reach(r, smooth=1) == 50


def test_parse_int_list():
    assert harness.parse_int_list("1..3,7") == [1, 2, 3, 7]
    with pytest.raises(ConfigError):
        harness.parse_int_list(" , ")


# -- command line ------------------------------------------------------------

def test_cli_simulate_and_checkpoint(tmp_path, capsys):
    common = ["--set", "experiment.n_vehicles=3", "--set", "env.steps_per_episode=5",
              "--set", "agent.hidden=(8,)", "--episodes", "1"]
    ck = tmp_path / "agent.npz"
    assert main(["simulate", "--out", str(tmp_path / "m.csv"), "--save", str(ck), *common]) == 0
    assert len(read_rows(tmp_path / "m.csv")) == 5
    assert main(["simulate", "--agent", "equal-bandwidth", "--load", str(ck),
                 "--out", str(tmp_path / "e.csv"), *common]) == 0
    assert len(read_rows(tmp_path / "e.csv")) == 5
    assert main(["checkpoint", "--load", str(ck)]) == 0
    info = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert info["extra"]["episodes"] == 1


def test_cli_reports_config_errors(tmp_path, capsys):
    code = main(["simulate", "--out", str(tmp_path / "m.csv"), "--set", "agent.nope=1"])
    assert code != 0
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "config" and "agent.nope" in err["message"]


def test_cli_missing_checkpoint(tmp_path, capsys):
    code = main(["checkpoint", "--load", str(tmp_path / "missing.npz")])
    assert code != 0
    assert "error" in json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_cli_sweep(tmp_path, capsys):
    code = main(["sweep", "--vehicles", "3", "--seeds", "1", "--agents", "popular-refresh,random-offload",
                 "--set", "env.steps_per_episode=5", "--set", "experiment.eval_episodes=1",
                 "--out", str(tmp_path)])
    assert code == 0
    assert len(read_rows(tmp_path / "summary.csv")) == 2
