import logging

import numpy as np
import pandas as pd
import pytest

import src.xcli.commands as commands
import src.xcli.main as cli
from src.bregman.checks import CheckResult
from src.utils.config import get_settings
from src.utils.exceptions import ConfigurationError, NumericError
from src.xcli.main import main
from src.xcli.models import ModelConfig, load_config, parse_config
from src.xcli.scene_builder import build_scene, build_split, expected_blocks


def _run(*argv) -> int:
    return main([str(a) for a in argv])


# ----------------------------------------------------------------------
# Config loading
# ----------------------------------------------------------------------
def test_unknown_key_reports_its_path(write_config):
    path = write_config(federation={"rouns": 5})
    with pytest.raises(ConfigurationError, match=r"federation\.rouns"):
        load_config(path)


def test_malformed_toml(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("seed = = 1\n")
    with pytest.raises(ConfigurationError, match="broken.toml"):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError, match="config file not found"):
        load_config(tmp_path / "absent.toml")


def test_overrides_replace_top_level_keys(write_config):
    config = load_config(write_config(), {"seed": 99, "way": None})
    assert config.seed == 99
    assert config.way == "AB"
    assert config.fed_config().seed == 99


@pytest.mark.parametrize("model", [
    {"hidden": [8]},
    {"hidden": [8, 8, 8]},
    {"hidden": [8, 8], "split": "coarse"},
    {"hidden": [8, 8], "boundaries": [4]},
])
def test_expected_blocks_matches_built_split(model, config_document):
    config = parse_config(config_document(model=model))
    scene = build_scene(config.scene, config.seed)
    assert expected_blocks(config.model) == build_split(config.model, scene, config.seed).num_blocks


def test_expected_blocks_for_cnn():
    assert expected_blocks(ModelConfig(kind="cnn", conv_channels=[4, 8], hidden=[16])) == 4
    assert expected_blocks(ModelConfig(kind="cnn", split="coarse")) == 2


# ----------------------------------------------------------------------
# run
# ----------------------------------------------------------------------
def test_minimal_run_writes_outputs(write_config, tmp_path):
    out = tmp_path / "out"
    assert _run("run", "--config", write_config(), "--out", out) == 0
    metrics = pd.read_csv(out / "metrics_AB_lr0.05.csv")
    assert metrics["round"].tolist() == [0, 10, 20]
    assert metrics["local_acc"].between(0, 1).all()
    # three records are too few to score
    assert not (out / "summary.csv").exists()
    for name in ("partition_stats.csv", "scene_summary.csv", "effective_config.toml"):
        assert (out / name).exists()


def test_reruns_are_byte_identical(write_config, tmp_path):
    config = write_config(way="AaB")
    first, second = tmp_path / "first", tmp_path / "second"
    assert _run("run", "--config", config, "--out", first) == 0
    assert _run("run", "--config", config, "--out", second, "--threads", 3) == 0
    for name in ("metrics_AaB_lr0.05.csv", "partition_stats.csv", "scene_summary.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

    # the echoed config reproduces the run
    third = tmp_path / "third"
    assert _run("run", "--config", first / "effective_config.toml", "--out", third) == 0
    assert (first / "metrics_AaB_lr0.05.csv").read_bytes() == (third / "metrics_AaB_lr0.05.csv").read_bytes()


def test_seed_flag_changes_the_run(write_config, tmp_path):
    config = write_config()
    assert _run("run", "--config", config, "--out", tmp_path / "a") == 0
    assert _run("run", "--config", config, "--out", tmp_path / "b", "--seed", 8) == 0
    a = (tmp_path / "a" / "metrics_AB_lr0.05.csv").read_bytes()
    b = (tmp_path / "b" / "metrics_AB_lr0.05.csv").read_bytes()
    assert a != b


def test_bad_way_exits_two_before_training(write_config, tmp_path, caplog):
    out = tmp_path / "out"
    with caplog.at_level(logging.ERROR):
        assert _run("run", "--config", write_config(way="ZZ"), "--out", out) == 2
    assert "invalid value for key 'way'" in caplog.text
    assert not list(out.glob("metrics_*.csv"))


def test_bad_config_exits_two(write_config, tmp_path):
    assert _run("run", "--config", write_config(seed=-1), "--out", tmp_path) == 2


def test_library_failure_exits_three(write_config, tmp_path, monkeypatch):
    def explode(ctx):
        raise NumericError("loss is NaN")

    monkeypatch.setattr(cli, "cmd_run", explode)
    assert _run("run", "--config", write_config(), "--out", tmp_path) == 3


def test_auto_run_writes_coefficients(write_config, tmp_path):
    out = tmp_path / "out"
    config = write_config(way="AutoSA", federation={"rounds": 4, "record_every": 2})
    assert _run("run", "--config", config, "--out", out) == 0
    coefficients = pd.read_csv(out / "coefficients_AutoSA_lr0.05.csv")
    assert sorted(coefficients["round"].unique().tolist()) == [0, 2, 4]


# ----------------------------------------------------------------------
# compare / interp / stats
# ----------------------------------------------------------------------
def test_compare_summarizes_each_way(write_config, tmp_path):
    out = tmp_path / "out"
    config = write_config(federation={"rounds": 40, "record_every": 10, "lrs": [0.01, 0.05]})
    assert _run("compare", "--config", config, "--out", out, "--ways", "AB", "aB") == 0
    summary = pd.read_csv(out / "summary.csv")
    assert summary.columns.tolist() == ["way", "best_lr", "global_acc", "local_acc"]
    assert summary["way"].tolist() == ["AB", "aB"]
    assert set(summary["best_lr"]) <= {0.01, 0.05}
    assert np.isnan(summary.loc[1, "global_acc"])
    assert not np.isnan(summary.loc[0, "global_acc"])


def test_compare_rejects_way_for_wrong_depth(write_config, tmp_path):
    out = tmp_path / "out"
    assert _run("compare", "--config", write_config(), "--out", out, "--ways", "AB", "ABC") == 2
    assert not list(out.glob("metrics_*.csv"))


def test_compare_error_names_the_ways_flag(write_config, tmp_path, caplog):
    with caplog.at_level(logging.ERROR):
        assert _run("compare", "--config", write_config(), "--out", tmp_path, "--ways", "AB", "ABC") == 2
    assert "invalid value for key '--ways'" in caplog.text


def test_config_compare_ways_are_validated(write_config, tmp_path, caplog):
    config = write_config(compare={"ways": ["AB", "ZZ"]})
    with caplog.at_level(logging.ERROR):
        assert _run("run", "--config", config, "--out", tmp_path) == 2
    assert "invalid value for key 'compare.ways'" in caplog.text


def test_interp_writes_heatmap_and_recommendation(write_config, tmp_path):
    out = tmp_path / "out"
    assert _run("interp", "--config", write_config(), "--out", out) == 0
    heatmap = pd.read_csv(out / "interp_heatmap.csv")
    assert len(heatmap) == 121
    line = (out / "recommendation.txt").read_text().strip()
    fields = dict(part.split("=") for part in line.split())
    assert set(fields) == {"alpha", "beta", "local_acc", "way"}
    assert fields["way"] in {"AB", "AaB", "ABb", "AaBb"}
    best = heatmap["local_acc"].max()
    assert float(fields["local_acc"]) == pytest.approx(best)


def test_stats_skips_training(write_config, tmp_path):
    out = tmp_path / "out"
    assert _run("stats", "--config", write_config(), "--out", out) == 0
    summary = pd.read_csv(out / "scene_summary.csv")
    assert summary.loc[0, "K"] == 4 and summary.loc[0, "C"] == 4
    stats = pd.read_csv(out / "partition_stats.csv")
    assert stats.columns.tolist() == ["client", "class", "count"]
    assert len(stats) == 16
    # label shift: every client sees exactly two classes
    assert (stats[stats["count"] > 0].groupby("client").size() == 2).all()
    assert not list(out.glob("metrics_*.csv"))


# ----------------------------------------------------------------------
# check
# ----------------------------------------------------------------------
def test_check_partition_passes(tmp_path):
    assert _run("check", "partition", "--out", tmp_path) == 0
    frame = pd.read_csv(tmp_path / "check_partition.csv")
    assert frame.columns.tolist() == ["check", "generator", "max_violation", "pass"]
    assert frame["pass"].all()


def test_check_gradcheck_passes(tmp_path):
    assert _run("check", "gradcheck", "--trials", 2, "--out", tmp_path) == 0
    assert (tmp_path / "check_gradcheck.csv").exists()


def test_failed_check_exits_one(tmp_path, monkeypatch):
    monkeypatch.setattr(commands, "run_suite",
                        lambda suite, rng, trials: [CheckResult("minimizer", "kl", 1.0, False)])
    assert _run("check", "bregman", "--out", tmp_path) == 1
    assert not pd.read_csv(tmp_path / "check_bregman.csv")["pass"].any()


def test_seed_flag_is_range_checked(tmp_path):
    with pytest.raises(SystemExit):
        _run("check", "partition", "--out", tmp_path, "--seed", 2 ** 63)


@pytest.fixture
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def test_startup_line_names_app_and_environment(tmp_path, monkeypatch, caplog, fresh_settings):
    monkeypatch.setenv("FEDSPLIT_APP_NAME", "Desk FedSplit")
    monkeypatch.setenv("FEDSPLIT_ENVIRONMENT", "ci")
    with caplog.at_level(logging.INFO):
        assert _run("check", "partition", "--out", tmp_path) == 0
    assert "Desk FedSplit [ci] check" in caplog.text
