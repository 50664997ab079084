import json
import os
import shutil

import numpy as np
import pytest
import yaml

from conftest import DATA, two_cluster
from midgcn.cli import main
from midgcn.config import config_from_dict, load_config
from midgcn.datasets import write_dataset
from midgcn.exceptions import ConfigError
from midgcn.io import read_edge_list, read_features, read_perturbation

FAST = {"hidden": 8, "epochs_max": 40, "patience": 10}


@pytest.fixture(scope="module")
def toy(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    g, y = two_cluster(20, p_in=0.4, p_out=0.03, seed=7)
    rng = np.random.default_rng(0)
    x = (rng.random((40, 8)) < 0.15).astype(float)
    x[y == 0, 0] = 1.0
    x[y == 1, 1] = 1.0
    return write_dataset(root / "data", "toy", g, x, y)


def _config(tmp_path, toy, **sections):
    data = {"dataset": str(toy), "seeds": [0, 1], "split": {"train": 0.3, "val": 0.2}, "train": dict(FAST), **sections}
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def _run(*argv):
    return main([str(a) for a in argv])


class TestConfig:
    def test_defaults(self, toy):
        cfg = config_from_dict({"dataset": str(toy)})
        assert cfg.seeds == [0, 1, 2, 3, 4] and cfg.baseline.filter_kind == "low"
        assert cfg.attack.kind == "dice" and cfg.analysis.degree_min == 10

    def test_relative_paths(self, tmp_path, toy):
        (tmp_path / "sub").mkdir()
        path = tmp_path / "sub" / "exp.yaml"
        path.write_text(yaml.safe_dump({"dataset": os.path.relpath(toy, path.parent)}))
        assert load_config(path).dataset.resolve() == toy.resolve()

    def test_preset(self, toy):
        cfg = config_from_dict({"dataset": str(toy), "train": {"preset": "citeseer", "patience": 50}})
        assert (cfg.train.alpha, cfg.train.hidden, cfg.train.patience) == (0.55, 64, 50)

    def test_baseline_inherits_train(self, toy):
        cfg = config_from_dict({"dataset": str(toy), "train": {"hidden": 16}})
        assert cfg.baseline.hidden == 16 and cfg.baseline.filter_kind == "low"

    @pytest.mark.parametrize(
        "extra",
        [
            {"train": {"alpha": 3.0}},
            {"train": {"dropout_rate": 1.5}},
            {"seeds": []},
            {"split": {"train": 0.6, "val": 0.5}},
            {"attack": {"kind": "metattack"}},
            {"attack": {"kind": "file"}},
            {"analysis": {"embedding": "input"}},
            {"compare": {"rates": [1.5]}},
            {"bogus": 1},
            {"train": {"preset": "pubmed"}},
            {"train": {"momentum": 0.9}},
        ],
    )
    def test_rejects(self, toy, extra):
        with pytest.raises(ConfigError):
            config_from_dict({"dataset": str(toy), **extra})

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(ConfigError):
            config_from_dict({"dataset": str(tmp_path / "nope.yaml")})

    def test_unparseable(self, tmp_path):
        (tmp_path / "bad.yaml").write_text("dataset: [unclosed\n")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "bad.yaml")


class TestExitCodes:
    def test_invalid_alpha(self, tmp_path, toy):
        assert _run("train", "--config", _config(tmp_path, toy, train={"alpha": 3.0}), "--out", tmp_path / "r") == 2

    def test_no_config(self, tmp_path):
        assert _run("train", "--out", tmp_path / "r") == 2

    def test_bad_threads(self, tmp_path, toy):
        assert _run("train", "--dataset", toy, "--threads", "0", "--out", tmp_path / "r") == 2

    def test_data_error(self, tmp_path, toy):
        # a manifest claiming more nodes than the label file holds
        for name in ("edges.txt", "features.txt", "labels.txt"):
            shutil.copy(toy.parent / name, tmp_path / name)
        (tmp_path / "m.yaml").write_text(toy.read_text().replace("n: 40", "n: 41"))
        assert _run("attack", "--dataset", tmp_path / "m.yaml", "--out", tmp_path / "r") == 3

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_numerical_failure(self, tmp_path, toy):
        cfg = _config(tmp_path, toy, train={**FAST, "learning_rate": 1e200})
        assert _run("train", "--config", cfg, "--out", tmp_path / "r") == 4


class TestCommands:
    def test_train(self, tmp_path, toy):
        out = tmp_path / "train"
        assert _run("train", "--config", _config(tmp_path, toy), "--out", out) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["test_accuracy"]) == 2 and 0 <= summary["mean"] <= 1
        assert {p.name for p in out.iterdir()} >= {
            "config.json", "inputs.json", "checkpoint_seed0.json", "report_seed1.json", "summary.json"
        }
        assert str(toy) in json.loads((out / "inputs.json").read_text())

    def test_reproducible(self, tmp_path, toy):
        cfg = _config(tmp_path, toy)
        for d in ("a", "b"):
            assert _run("train", "--config", cfg, "--out", tmp_path / d) == 0
        for name in ("summary.json", "report_seed0.json", "checkpoint_seed1.json"):
            assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()

    def test_seed_flag(self, tmp_path, toy):
        assert _run("train", "--config", _config(tmp_path, toy), "--seed", "3", "--out", tmp_path / "r") == 0
        assert json.loads((tmp_path / "r" / "summary.json").read_text())["seeds"] == [3]

    def test_threads_match_serial(self, tmp_path, toy):
        cfg = _config(tmp_path, toy)
        assert _run("train", "--config", cfg, "--out", tmp_path / "s") == 0
        assert _run("train", "--config", cfg, "--threads", "2", "--out", tmp_path / "p") == 0
        assert (tmp_path / "s" / "summary.json").read_text() == (tmp_path / "p" / "summary.json").read_text()

    def test_attack_rate_zero(self, tmp_path, toy):
        out = tmp_path / "atk"
        assert _run("attack", "--dataset", toy, "--rate", "0", "--out", out) == 0
        assert (out / "perturbation.txt").read_text() == ""
        assert read_edge_list(out / "attacked_edges.txt").num_edges == json.loads((out / "attack.json").read_text())["edges_clean"]

    def test_attack_then_train_on_file(self, tmp_path, toy):
        assert _run("attack", "--dataset", toy, "--attack-kind", "random_flip", "--rate", "0.2", "--out", tmp_path / "a") == 0
        info = json.loads((tmp_path / "a" / "attack.json").read_text())
        assert len(read_perturbation(tmp_path / "a" / "perturbation.txt")) == info["n_operations"]
        for name in ("perturbation.txt", "attacked_edges.txt"):
            argv = ("train", "--config", _config(tmp_path, toy), "--attacked", tmp_path / "a" / name, "--out", tmp_path / name)
            assert _run(*argv) == 0

    def test_feature_attack(self, tmp_path, toy):
        out = tmp_path / "f"
        assert _run("attack", "--dataset", toy, "--attack-kind", "feature", "--n-flips", "5", "--out", out) == 0
        assert read_features(out / "features_attacked.txt").shape == (40, 8)

    def test_targeted_attack(self, tmp_path, toy):
        out = tmp_path / "t"
        argv = ("attack", "--dataset", toy, "--attack-kind", "targeted", "--targets", "0", "5", "--n-perturbations", "2")
        assert _run(*argv, "--out", out) == 0
        assert json.loads((out / "attack.json").read_text())["n_operations"] == 4

    def test_spectrum(self, tmp_path, toy):
        assert _run("spectrum", "--dataset", toy, "--out", tmp_path / "clean") == 0
        assert (tmp_path / "clean" / "spectrum.csv").read_text().splitlines()[0] == "index,lambda_clean"
        assert not (tmp_path / "clean" / "band_stats.json").exists()
        assert _run("spectrum", "--dataset", toy, "--rate", "0.25", "--band-p", "0.5", "--out", tmp_path / "pair") == 0
        stats = json.loads((tmp_path / "pair" / "band_stats.json").read_text())
        assert stats["p"] == 0.5 and {"low", "mid", "high"} <= set(stats)

    def test_analyze(self, tmp_path, toy):
        cfg = _config(tmp_path, toy, analysis={"rank_rates": [0.0, 0.1], "degree_min": 2})
        assert _run("analyze", "--config", cfg, "--out", tmp_path / "an") == 0
        res = json.loads((tmp_path / "an" / "analysis.json").read_text())
        assert res["generalization_condition"]["mid"] is True and res["generalization_condition"]["low"] is False
        assert len(res["rank_growth"]) == 2 and res["common_neighbors"]["n_edges"] > 0

    def test_compare_rate_zero(self, tmp_path, toy):
        cfg = _config(tmp_path, toy, compare={"rates": [0.0]})
        assert _run("compare", "--config", cfg, "--out", tmp_path / "c") == 0
        assert len((tmp_path / "c" / "summary.csv").read_text().splitlines()) == 3

    def test_compare_with_alpha_sweep(self, tmp_path, toy):
        cfg = _config(tmp_path, toy, compare={"rates": [0.0, 0.2], "alphas": [0.0, 1.0], "alpha_sweep_rate": 0.1},
                      analysis={"degree_min": 2})
        assert _run("compare", "--config", cfg, "--out", tmp_path / "c") == 0
        grid = (tmp_path / "c" / "grid.csv").read_text().splitlines()
        assert len(grid) == 1 + 2 * 2 * 2
        assert len((tmp_path / "c" / "alpha_sweep.csv").read_text().splitlines()) == 3


def test_cora_dice_op_count(tmp_path):
    manifest = DATA / "cora" / "manifest.yaml"
    if not manifest.is_file():
        pytest.skip("cora data not prepared")
    assert _run("attack", "--dataset", manifest, "--rate", "0.25", "--out", tmp_path / "cora") == 0
    assert len(read_perturbation(tmp_path / "cora" / "perturbation.txt")) == 1267
