import csv
import json
import os

import pytest

from fbdof.errors import ConfigError
from fbdof.harness import (ExperimentConfig, check_counts, check_worked_example, fmt_real,
                           map_trials, run_experiment, run_trial, trials_csv)


def test_config_parsing(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("# comment\nscheme = x2_mimo\nM = 2\nN = 3   # inline\n"
                    "mode = snr_sweep\ntrials = 4\np_grid_db = 10, 20\n")
    cfg = ExperimentConfig.from_file(path, output_dir=str(tmp_path))
    assert cfg.params == {"M": 2, "N": 3}
    assert cfg.p_grid_db == (10.0, 20.0)
    assert cfg.trials == 4 and cfg.master_seed == 0
    assert cfg.name == "x2_mimo_M2_N3_snr_sweep"
    assert ExperimentConfig.from_file(path, master_seed=9).master_seed == 9


@pytest.mark.parametrize("text,msg", [
    ("M = 2", "scheme"),
    ("scheme = warp", "unknown scheme"),
    ("scheme = x2_mimo\nM = 2", "needs parameter N"),
    ("scheme = kx_partial\nK = 1", "at least 2"),
    ("scheme = k_ic\nK = 2\nmode = fast", "unknown mode"),
    ("scheme = k_ic\nK = 2\ntrials = 0", "trials"),
    ("scheme = k_ic\nK = two", "bad value"),
    ("scheme = k_ic\nK = 2\ncolour = red", "unknown config keys"),
    ("scheme = k_ic\nK = 2\nmode = snr_sweep\np_grid_db = 20, 10", "ascending"),
    ("scheme = k_ic\nK = 2\nmode = snr_sweep\np_grid_db = 20", "two grid points"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        ExperimentConfig.from_text(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        ExperimentConfig.from_file(tmp_path / "missing.cfg")


def test_default_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("FBDOF_OUTPUT_DIR", str(tmp_path / "out"))
    cfg = ExperimentConfig("k_ic", {"K": 2})
    assert cfg.output_dir == str(tmp_path / "out")


def test_rank_verify_experiment_files(tmp_path):
    cfg = ExperimentConfig("x2_mimo", {"M": 2, "N": 3}, "rank_verify", 5, output_dir=str(tmp_path))
    summary, paths = run_experiment(cfg)
    assert summary["ratio"] == "24/7" and summary["rank_pass"] == 1.0 and summary["passed"]
    assert set(paths) == {"csv", "json"}
    rows = list(csv.DictReader(open(paths["csv"])))
    assert len(rows) == 5
    assert rows[0]["decode_exact"] == "" and rows[0]["rank_ok"] == "1"
    assert json.load(open(paths["json"]))["phase_lengths"] == [3, 3, 1]


def test_noiseless_decode_experiment(tmp_path):
    cfg = ExperimentConfig("kx_partial", {"K": 3}, "noiseless_decode", 5,
                           output_dir=str(tmp_path))
    summary, _ = run_experiment(cfg)
    assert (summary["symbols"], summary["slots"]) == (9, 6)
    assert summary["decode_pass"] == 1.0


def test_snr_sweep_experiment_and_plot_data(tmp_path):
    cfg = ExperimentConfig("k_ic", {"K": 2}, "snr_sweep", 6, output_dir=str(tmp_path))
    summary, paths = run_experiment(cfg)
    assert summary["slope"] == pytest.approx(0.8, rel=0.1)
    lines = open(paths["dat"]).read().splitlines()
    assert lines[0].startswith("#") and len(lines) == 5
    x, y = map(float, lines[1].split())
    assert x == pytest.approx(30 / (10 * 0.30103), rel=1e-4)
    head = open(paths["csv"]).readline().strip().split(",")
    assert head[-4:] == ["rate_30dB", "rate_40dB", "rate_50dB", "rate_60dB"]


def test_failed_assertion_marks_summary(tmp_path):
    # an impossible tolerance must flip the verdict, not be ignored
    cfg = ExperimentConfig("k_ic", {"K": 2}, "snr_sweep", 2, p_grid_db=(0.0, 3.0),
                           slope_tol=1e-9, output_dir=str(tmp_path))
    summary, _ = run_experiment(cfg)
    assert not summary["passed"] and summary["failures"]


def test_parallel_map_matches_serial():
    cfg = ExperimentConfig("kx_global", {"K": 3}, "noiseless_decode", 6, output_dir="unused")
    jobs = [(cfg, t) for t in range(6)]
    serial = trials_csv(cfg, map_trials(run_trial, jobs, 1))
    parallel = trials_csv(cfg, map_trials(run_trial, jobs, 3))
    assert serial == parallel


def test_fmt_real():
    assert fmt_real(1 / 3) == "0.333333333333"
    assert fmt_real(2.0) == "2"


def test_single_criterion_helpers():
    assert check_worked_example().passed
    assert check_counts().passed


def test_no_files_without_write(tmp_path):
    cfg = ExperimentConfig("k_ic", {"K": 2}, trials=1, output_dir=str(tmp_path / "none"))
    _, paths = run_experiment(cfg, write=False)
    assert paths == {} and not os.path.exists(tmp_path / "none")
