import json
import subprocess
import sys

import numpy as np
import pytest

from costqr import cli, dataio
from costqr.errors import ConfigError
from costqr.config import load_config, parse_config


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, command, cfg, out="out.json", *extra):
    out_path = tmp_path / out
    code = cli.main([command, "--config", write_config(tmp_path, cfg), "--out", str(out_path), *extra])
    return code, out_path


def test_place_identity(tmp_path):
    dataio.save_matrix(tmp_path / "eye.cqr", np.eye(5))
    code, out = run(tmp_path, "place", {"data": {"path": "eye.cqr"}, "k": 3})
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["sensor_sets"][0]["sensors"] == [0, 1, 2]
    assert doc["schema"] == "costqr/v1"
    assert doc["config"]["seed"] == 0


def test_place_blocked_region_and_csv(tmp_path):
    cfg = {
        "data": {"synthetic": {"kind": "low_rank_noise", "m": 40, "n": 24, "rank": 6, "seed": 1}},
        "cost": {"step": {"indices": list(range(12))}},
        "k": 4,
        "gammas": [0.0, 1e6],
    }
    code, out = run(tmp_path, "place", cfg, "out.csv")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,gamma,total_cost,degenerate,sensors"
    last = lines[-1].split(",")
    assert last[2] == "0.0"
    assert all(int(j) >= 12 for j in last[4].split())


def test_zero_cost_column_is_free(tmp_path):
    eta = np.ones(6)
    eta[4] = 0
    np.savetxt(tmp_path / "eta.csv", eta)
    X = np.random.default_rng(0).standard_normal((10, 6))
    dataio.save_matrix(tmp_path / "x.csv", X)
    cfg = {"data": {"path": "x.csv"}, "cost": {"path": "eta.csv"}, "k": 1, "gammas": [1e6]}
    code, out = run(tmp_path, "place", cfg)
    s = json.loads(out.read_text())["sensor_sets"][0]
    assert code == 0 and s["sensors"] == [4] and s["total_cost"] == 0.0


def test_reruns_are_byte_identical(tmp_path):
    cfg = {
        "data": {"synthetic": {"kind": "traveling_wave", "m": 30, "n": 16}},
        "cost": {"uniform": 0.5},
        "preprocess": {"strategy": "random_mix"},
        "k": [2],
        "gammas": [0, 1],
        "folds": 3,
    }
    for cmd in ("place", "sweep"):
        _, a = run(tmp_path, cmd, cfg, "a.json")
        _, b = run(tmp_path, cmd, cfg, "b.json")
        assert a.read_bytes() == b.read_bytes()


def test_sweep_single_fold(tmp_path):
    cfg = {
        "data": {"synthetic": {"kind": "low_rank_noise", "m": 30, "n": 10, "rank": 3}},
        "k": 3,
        "folds": 1,
    }
    code, out = run(tmp_path, "sweep", cfg, "out.csv")
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4  # header, one record, mean, std


def test_sweep_thread_count_does_not_change_output(tmp_path, monkeypatch):
    cfg = {
        "data": {"synthetic": {"kind": "low_rank_noise", "m": 40, "n": 12, "rank": 4, "noise": 0.1}},
        "cost": {"uniform": 1.0},
        "k": 3,
        "gammas": [0, 0.5, 2],
        "folds": 4,
    }
    monkeypatch.setenv("COSTQR_THREADS", "1")
    assert cli.thread_count() == 1
    _, a = run(tmp_path, "sweep", cfg, "a.json")
    monkeypatch.setenv("COSTQR_THREADS", "4")
    assert cli.thread_count() == 4
    _, b = run(tmp_path, "sweep", cfg, "b.json")
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv("COSTQR_THREADS", "0")
    assert cli.thread_count() >= 1


def test_oracle_diagonal(tmp_path):
    dataio.save_matrix(tmp_path / "d.csv", np.diag([3.0, 2.0, 1.0]))
    code, out = run(tmp_path, "oracle", {"data": {"path": "d.csv"}, "k": 1})
    row = json.loads(out.read_text())["comparisons"][0]
    assert code == 0
    assert row["ratio"] == 1.0 and row["greedy_sensors"] == row["oracle_sensors"] == [0]


def test_oracle_cap_is_reported(tmp_path, capsys):
    cfg = {
        "data": {"synthetic": {"kind": "low_rank_noise", "m": 5, "n": 30, "rank": 5}},
        "k": 5,
        "oracle": {"cap": 10},
    }
    code, _ = run(tmp_path, "oracle", cfg)
    assert code == 1
    assert "failed" in capsys.readouterr().err


def test_compare_and_gen(tmp_path):
    syn = {"kind": "mirror_symmetric", "m": 30, "grid": [6, 4], "rank": 4, "noise": 0.01}
    cfg = {
        "data": {"synthetic": syn},
        "cost": {"step": {"rows": [3, 6]}},
        "k": 2,
        "gammas": [0, 1],
        "baseline": {"trials": 3},
    }
    code, out = run(tmp_path, "compare", cfg)
    assert code == 0
    methods = {p["method"] for p in json.loads(out.read_text())["points"]}
    assert methods == {"raw_qr", "rm_qr_2p", "svd_qr_1p", "raw_rs", "rm_rs_2p"}

    code, out = run(tmp_path, "gen", cfg, "x.cqr")
    assert code == 0
    X = dataio.load_matrix(out)
    assert X.shape == (30, 24)
    code, out = run(tmp_path, "gen", cfg, "x.csv")
    np.testing.assert_array_equal(dataio.load_matrix(out), X)


@pytest.mark.parametrize(
    "cfg, where",
    [
        ({"k": 1}, "data"),
        ({"data": {"synthetic": {"kind": "low_rank_noise", "n": 4}}, "gammas": [1, 0]}, "gammas"),
        ({"data": {"synthetic": {"kind": "low_rank_noise", "n": 4}}, "k": "two"}, "k[0]"),
        ({"data": {"synthetic": {"kind": "low_rank_noise", "n": 4}}, "colour": 1}, "colour"),
        ({"data": {"synthetic": {"kind": "low_rank_noise", "n": 4}}, "cost": {"free": 1}}, "cost"),
    ],
)
def test_config_errors_name_the_field(tmp_path, cfg, where):
    with pytest.raises(ConfigError) as exc:
        parse_config(cfg, tmp_path)
    assert exc.value.path == where
    assert cli.main(["place", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_bad_cost_length_and_missing_file(tmp_path):
    np.savetxt(tmp_path / "eta.csv", np.ones(3))
    cfg = {"data": {"synthetic": {"kind": "low_rank_noise", "n": 4}}, "cost": {"path": "eta.csv"}}
    code, _ = run(tmp_path, "place", cfg)
    assert code == 2
    assert cli.main(["place", "--config", str(tmp_path / "nope.json"), "--out", "x"]) == 2


def test_seed_override(tmp_path):
    cfg = {"data": {"synthetic": {"kind": "low_rank_noise", "n": 4}}, "seed": 3}
    assert load_config(write_config(tmp_path, cfg)).seed == 3
    assert load_config(write_config(tmp_path, cfg), seed=7).split.seed == 7


def test_module_entry_point(tmp_path):
    cfg = {"data": {"synthetic": {"kind": "low_rank_noise", "n": 6}}, "k": 2}
    res = subprocess.run(
        [sys.executable, "-m", "costqr", "place", "--config", write_config(tmp_path, cfg),
         "--out", str(tmp_path / "o.json")],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    assert len(json.loads((tmp_path / "o.json").read_text())["sensor_sets"][0]["sensors"]) == 2
