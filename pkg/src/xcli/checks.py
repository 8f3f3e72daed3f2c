"""
Oracle suites behind the `check` subcommand: gradcheck, bregman, partition
"""
import logging
from typing import Callable, Dict, List

import numpy as np

from src.autofuse.fusion import GumbelDraws
from src.autofuse.model import AutoFuseModel
from src.autofuse.params import FusionMode, FusionParams
from src.bregman.checks import CheckResult, run_bregman_suite
from src.nncore.gradcheck import GRAD_TOLERANCE, check_layer, check_loss, layer_cases, numeric_grad, relative_error
from src.scenes.partition import covariate_shift_partition, iid_partition, label_shift_partition
from src.scenes.stats import partition_stats
from src.scenes.synth import synth_label_dataset
from src.splitnet.client_model import ClientModel, local_loss
from src.splitnet.network import build_mlp_split
from src.splitnet.ways import enumerate_ways, format_way

logger = logging.getLogger(__name__)

SUITES = ("gradcheck", "bregman", "partition")


def _model_grad_error(model, loss: Callable[[bool], float]) -> float:
    """Backprop once, then compare every parameter array against central differences"""
    model.zero_grad()
    loss(True)
    arrays = model.shared_arrays() + model.private_arrays() + model.fusion_arrays()
    grads = [g.copy() for g in model.shared_grads() + model.private_grads() + model.fusion_grads()]
    return max(relative_error(g, numeric_grad(lambda: loss(False), p)) for p, g in zip(arrays, grads))


def fusion_grad_error(mode: FusionMode, rng: np.random.Generator) -> float:
    """End-to-end check of a tiny fused model, psi included; HS draws frozen"""
    d_in, num_classes, batch = 3, 3, 4
    split = build_mlp_split(d_in, [4], num_classes, rng)
    psi = FusionParams(mode, rng.normal(size=FusionParams.zeros(mode).raw.size))
    model = AutoFuseModel(split, psi, rng)
    x = rng.normal(size=(batch, d_in))
    y = rng.integers(0, num_classes, size=batch)
    draws = GumbelDraws.sample(rng)
    return _model_grad_error(model, lambda backward: model.loss(x, y, backward=backward, draws=draws).total)


def way_grad_error(way, rng: np.random.Generator) -> float:
    d_in, num_classes, batch = 3, 3, 4
    model = ClientModel(build_mlp_split(d_in, [4], num_classes, rng), way, rng)
    x = rng.normal(size=(batch, d_in))
    y = rng.integers(0, num_classes, size=batch)
    return _model_grad_error(model, lambda backward: local_loss(model, x, y, backward).total)


def gradcheck_suite(rng: np.random.Generator, trials: int = 100) -> List[CheckResult]:
    worst: Dict[str, float] = {}

    def note(name: str, error: float) -> None:
        worst[name] = max(worst.get(name, 0.0), error)

    for _ in range(trials):
        for name, layer, x in layer_cases(rng):
            note(name, check_layer(layer, x, rng))
        note("loss_softmax_ce", check_loss(rng))
        for mode in FusionMode:
            note(mode.algorithm, fusion_grad_error(mode, rng))
    for way in enumerate_ways(2):
        for _ in range(max(trials // 10, 1)):
            note(f"way_{format_way(way, 2)}", way_grad_error(way, rng))
    return [CheckResult(name, "", err, err < GRAD_TOLERANCE) for name, err in worst.items()]


def partition_suite(rng: np.random.Generator) -> List[CheckResult]:
    """Label-shift shard shape (100 clients x 5 classes x 500 samples) plus disjointness of the others"""
    num_classes, shards_per_class, num_clients, shards_per_client = 10, 50, 100, 5
    ds = synth_label_dataset(50_000, num_classes, 8, 3.0, rng)
    partition = label_shift_partition(ds, num_clients, shards_per_class, shards_per_client, rng)
    report = partition_stats(partition, ds)
    bad_classes = int(np.sum(report.classes_per_client() != shards_per_client))
    bad_sizes = int(np.sum(report.sample_counts != 500))
    bad_local = sum(1 for k in range(num_clients)
                    if partition.train[k].size != 400 or partition.test[k].size != 100)
    results = [
        CheckResult("label_shift_classes_per_client", "", float(bad_classes), bad_classes == 0),
        CheckResult("label_shift_samples_per_client", "", float(bad_sizes), bad_sizes == 0),
        CheckResult("label_shift_local_split", "", float(bad_local), bad_local == 0),
        CheckResult("label_shift_clients", "", float(abs(partition.num_clients - num_clients)),
                    partition.num_clients == num_clients),
    ]
    for name, build in (("covariate_shift", lambda: covariate_shift_partition(ds, 20, 0.5, rng)),
                        ("iid", lambda: iid_partition(ds, 20, rng))):
        part = build()
        owned = np.concatenate([part.client_indices(k) for k in range(part.num_clients)])
        overlap = owned.size - np.unique(owned).size
        results.append(CheckResult(f"{name}_disjoint", "", float(overlap), overlap == 0))
    return results


def run_suite(suite: str, rng: np.random.Generator, trials: int = 100) -> List[CheckResult]:
    if suite == "gradcheck":
        return gradcheck_suite(rng, trials)
    if suite == "bregman":
        return run_bregman_suite(rng, trials=max(trials, 1000))
    return partition_suite(rng)
