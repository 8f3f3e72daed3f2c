"""
Shared fixtures: seeded generators, tiny scenes and config files
"""
from pathlib import Path
from typing import Any, Callable, Dict

import numpy as np
import pytest
import tomli_w

from src.scenes.dataset import Scene
from src.scenes.partition import build_global_test, iid_partition, label_shift_partition
from src.scenes.synth import synth_label_dataset
from src.splitnet.network import build_mlp_split


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def iid_scene() -> Scene:
    """4 clients, 3 classes, 4 features; global test = union of local tests"""
    gen = np.random.default_rng(7)
    ds = synth_label_dataset(160, 3, 4, 3.0, gen)
    partition = iid_partition(ds, 4, gen)
    partition.global_test = build_global_test(partition, "union_of_local")
    return Scene.build(ds, partition)


@pytest.fixture
def label_scene() -> Scene:
    """4 clients holding 2 of 4 classes each"""
    gen = np.random.default_rng(11)
    ds = synth_label_dataset(240, 4, 6, 3.0, gen)
    partition = label_shift_partition(ds, 4, 2, 2, gen)
    partition.global_test = build_global_test(partition, "union_of_local")
    return Scene.build(ds, partition)


@pytest.fixture
def small_split():
    """Linear(4,6) ReLU | Linear(6,3): L = 2"""
    return build_mlp_split(4, [6], 3, np.random.default_rng(3))


MINIMAL_CONFIG: Dict[str, Any] = {
    "seed": 7,
    "way": "AB",
    "scene": {
        "num_samples": 200,
        "num_classes": 4,
        "dim": 6,
        "num_clients": 4,
        "shards_per_class": 2,
        "shards_per_client": 2,
    },
    "model": {"hidden": [8]},
    "federation": {"rounds": 20, "local_epochs": 1, "batch_size": 16, "lrs": [0.05], "record_every": 10},
}


def merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., Path]:
    """Write MINIMAL_CONFIG merged with overrides to a TOML file"""
    def write(name: str = "config.toml", **overrides) -> Path:
        path = tmp_path / name
        path.write_text(tomli_w.dumps(merge(MINIMAL_CONFIG, overrides)))
        return path

    return write


@pytest.fixture
def config_document() -> Callable[..., Dict[str, Any]]:
    """MINIMAL_CONFIG merged with overrides, as a plain dict"""
    def build(**overrides) -> Dict[str, Any]:
        return merge(MINIMAL_CONFIG, overrides)

    return build
