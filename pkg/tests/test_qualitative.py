"""
Desk-scale experiments checking the robust orderings between ways.

Slow: deselect with `pytest -m "not slow"`.
"""
from collections import Counter
from typing import Dict, List

import numpy as np
import pytest

from src.autofuse.params import PAIRS, FusionMode
from src.fedsim.runner import ExperimentResult, run_experiment
from src.interp.sweep import interp_sweep, recommend_way
from src.splitnet.ways import WayKind, canonical
from src.xcli.models import ExperimentConfig, parse_config
from src.xcli.scene_builder import all_way_names, build_scene, build_split, resolve_way

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2)
LR = 0.05
NOISE_BAND = 0.01


def _config(seed: int, hidden: List[int], partition: str = "label_shift") -> ExperimentConfig:
    return parse_config({
        "seed": seed,
        "scene": {
            "num_samples": 3000,
            "num_classes": 10,
            "dim": 20,
            "num_clients": 10,
            "shards_per_class": 3,
            "shards_per_client": 3,
            "partition": partition,
        },
        "model": {"hidden": hidden},
        "federation": {"rounds": 200, "local_epochs": 1, "batch_size": 32, "lrs": [LR], "record_every": 10},
    })


def _train(config: ExperimentConfig, names) -> Dict[str, ExperimentResult]:
    scene = build_scene(config.scene, config.seed)
    split = build_split(config.model, scene, config.seed)
    return {name: run_experiment(scene, split, resolve_way(name, split.num_blocks), config.fed_config(), LR)
            for name in names}


def _local(result: ExperimentResult) -> float:
    return result.final_scores()[1]


@pytest.fixture(scope="module")
def label_shift_runs() -> List[Dict[str, ExperimentResult]]:
    """Every two-block way plus the automatic ones, once per seed"""
    names = all_way_names(2) + ["AutoCS", "AutoSA", "AutoHS"]
    return [_train(_config(seed, [64]), names) for seed in SEEDS]


def _majority(outcomes: List[bool]) -> bool:
    return sum(outcomes) * 2 > len(outcomes)


def test_individual_training_is_worst(label_shift_runs):
    manual = all_way_names(2)
    means = {name: np.mean([_local(runs[name]) for runs in label_shift_runs]) for name in manual}
    assert min(means, key=means.get) == "ab", means


@pytest.mark.parametrize("double,single", [("AaB", "aB"), ("AaBb", "ab"), ("ABb", "Ab")])
def test_double_branch_beats_single_branch(label_shift_runs, double, single):
    outcomes = [_local(runs[double]) >= _local(runs[single]) - NOISE_BAND for runs in label_shift_runs]
    assert _majority(outcomes), outcomes


@pytest.mark.parametrize("chain", [
    ["ABCD", "aBCD", "abCD", "abcD"],
    ["ABCD", "ABCd", "ABcd", "Abcd"],
])
def test_fine_grained_chains_degrade(chain):
    outcomes = []
    for seed in SEEDS:
        runs = _train(_config(seed, [64, 64, 64]), chain)
        scores = [_local(runs[name]) for name in chain]
        outcomes.append(all(b <= a + NOISE_BAND for a, b in zip(scores, scores[1:])))
    assert _majority(outcomes), outcomes


def test_iid_scene_needs_no_private_parts():
    verdicts = []
    for seed in SEEDS:
        config = _config(seed, [64], partition="iid")
        scene = build_scene(config.scene, config.seed)
        split = build_split(config.model, scene, config.seed)
        result = run_experiment(scene, split, canonical(WayKind.SSP, 1), config.fed_config(), LR)
        verdicts.append(recommend_way(interp_sweep(result.clients), split.num_blocks).way)
    assert Counter(verdicts).most_common(1)[0][0] == "AB", verdicts


@pytest.mark.parametrize("mode", list(FusionMode))
def test_automatic_fusion_matches_best_manual_way(label_shift_runs, mode):
    manual = all_way_names(2)
    best_manual = max(np.mean([_local(runs[name]) for runs in label_shift_runs]) for name in manual)
    auto = np.mean([_local(runs[mode.algorithm]) for runs in label_shift_runs])
    assert auto >= best_manual - 0.02

    for runs in label_shift_runs:
        frame = runs[mode.algorithm].coefficient_frame()
        assert ((frame["effective"] > 0) & (frame["effective"] < 1)).all()
        for _, rows in frame.groupby("round"):
            weights = dict(zip(rows["name"], rows["effective"]))
            for first, second in PAIRS[mode]:
                assert weights[first] + weights[second] == pytest.approx(1.0)
