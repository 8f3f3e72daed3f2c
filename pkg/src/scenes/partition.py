"""
Non-iid partitioners: label-shift shards, covariate-shift transforms, iid splits
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.scenes.dataset import AffineTransform, Dataset, ScenePartition
from src.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

MAX_ASSIGNMENT_ATTEMPTS = 100
GLOBAL_TEST_MODES = ("held_out", "union_of_local")


def _pool(ds: Dataset, indices: Optional[Sequence[int]]) -> np.ndarray:
    if indices is None:
        return np.arange(len(ds), dtype=np.int64)
    return np.asarray(indices, dtype=np.int64)


def split_local(indices: Sequence[int], fraction: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Shuffle and cut into round(fraction * n) train and the rest test"""
    indices = np.asarray(indices, dtype=np.int64)
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"local train fraction must lie in (0, 1), got {fraction}")
    if indices.size < 2:
        raise ConfigurationError(f"a local split needs at least 2 samples, got {indices.size}")
    shuffled = indices[rng.permutation(indices.size)]
    n_train = int(np.floor(fraction * indices.size + 0.5))
    return shuffled[:n_train], shuffled[n_train:]


def reserve_held_out(ds: Dataset, fraction: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Set aside a global test set before partitioning; returns (pool, held_out)"""
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"held-out fraction must lie in (0, 1), got {fraction}")
    order = rng.permutation(len(ds))
    n_held = int(np.floor(fraction * len(ds) + 0.5))
    return np.sort(order[n_held:]), np.sort(order[:n_held])


def _class_shards(ds: Dataset, pool: np.ndarray, shards_per_class: int,
                  rng: np.random.Generator) -> List[List[np.ndarray]]:
    shards = []
    for c in range(ds.num_classes):
        members = pool[ds.labels[pool] == c]
        if members.size < shards_per_class:
            raise ConfigurationError(
                f"class {c} has {members.size} samples, fewer than {shards_per_class} shards"
            )
        members = members[rng.permutation(members.size)]
        size = members.size // shards_per_class
        # the last shard of a class absorbs the remainder
        cuts = [members[j * size:(j + 1) * size] for j in range(shards_per_class - 1)]
        cuts.append(members[(shards_per_class - 1) * size:])
        shards.append(cuts)
    return shards


def label_shift_partition(ds: Dataset, num_clients: int, shards_per_class: int, shards_per_client: int,
                          rng: np.random.Generator, local_fraction: float = 0.8,
                          indices: Optional[Sequence[int]] = None) -> ScenePartition:
    """Every client receives shards_per_client shards of distinct classes"""
    total = ds.num_classes * shards_per_class
    if num_clients < 1 or shards_per_class < 1 or shards_per_client < 1:
        raise ConfigurationError("clients, shards per class and shards per client must be positive")
    if num_clients * shards_per_client != total:
        raise ConfigurationError(
            f"K*m = {num_clients}*{shards_per_client} must equal C*S = {ds.num_classes}*{shards_per_class}"
        )
    if shards_per_client > ds.num_classes:
        raise ConfigurationError(f"{shards_per_client} distinct classes per client but only C={ds.num_classes}")
    if shards_per_class > num_clients:
        raise ConfigurationError(
            f"S={shards_per_class} shards of one class cannot reach distinct clients among K={num_clients}"
        )

    pool = _pool(ds, indices)
    shards = _class_shards(ds, pool, shards_per_class, rng)

    for attempt in range(1, MAX_ASSIGNMENT_ATTEMPTS + 1):
        class_order = rng.permutation(ds.num_classes)
        client_order = rng.permutation(num_clients)
        owned: List[List[Tuple[int, np.ndarray]]] = [[] for _ in range(num_clients)]
        dealt = 0
        for c in class_order:
            for shard in shards[c]:
                owned[client_order[dealt % num_clients]].append((int(c), shard))
                dealt += 1
        if all(len({c for c, _ in held}) == shards_per_client for held in owned):
            break
        logger.debug(f"shard assignment attempt {attempt} repeated a class; reshuffling")
    else:
        raise ConfigurationError(f"no distinct-class shard assignment found in {MAX_ASSIGNMENT_ATTEMPTS} attempts")

    train, test = [], []
    for held in owned:
        members = np.concatenate([shard for _, shard in sorted(held, key=lambda item: item[0])])
        tr, te = split_local(members, local_fraction, rng)
        train.append(tr)
        test.append(te)
    partition = ScenePartition(train, test)
    partition.validate(len(ds))
    return partition


def _random_rotation(dim: int, angle: float, rng: np.random.Generator) -> np.ndarray:
    """Rotation by angle inside a random 2-plane; identity when dim < 2"""
    if dim < 2:
        return np.eye(dim)
    basis, _ = np.linalg.qr(rng.normal(size=(dim, 2)))
    u, v = basis[:, 0], basis[:, 1]
    plane = np.outer(u, u) + np.outer(v, v)
    turn = np.outer(v, u) - np.outer(u, v)
    return np.eye(dim) + (np.cos(angle) - 1.0) * plane + np.sin(angle) * turn


def _even_split(pool: np.ndarray, num_clients: int, rng: np.random.Generator) -> List[np.ndarray]:
    if num_clients < 1:
        raise ConfigurationError(f"need at least one client, got {num_clients}")
    if pool.size < 2 * num_clients:
        raise ConfigurationError(f"{pool.size} samples cannot give {num_clients} clients two samples each")
    return np.array_split(pool[rng.permutation(pool.size)], num_clients)


def covariate_shift_partition(ds: Dataset, num_clients: int, strength: float, rng: np.random.Generator,
                              local_fraction: float = 0.8,
                              indices: Optional[Sequence[int]] = None) -> ScenePartition:
    """Uniform random split; client k sees its samples through x -> R_k x + t_k"""
    if strength < 0:
        raise ConfigurationError(f"transform strength must be >= 0, got {strength}")
    pool = _pool(ds, indices)
    parts = _even_split(pool, num_clients, rng)
    dim = int(np.prod(ds.sample_shape))
    transforms, train, test = [], [], []
    for part in parts:
        angle = strength * rng.uniform(-np.pi / 2, np.pi / 2)
        rotation = _random_rotation(dim, angle, rng)
        translation = strength * rng.normal(size=dim)
        transforms.append(AffineTransform(rotation, translation))
        tr, te = split_local(part, local_fraction, rng)
        train.append(tr)
        test.append(te)
    partition = ScenePartition(train, test, transforms=transforms)
    partition.validate(len(ds))
    return partition


def iid_partition(ds: Dataset, num_clients: int, rng: np.random.Generator, local_fraction: float = 0.8,
                  indices: Optional[Sequence[int]] = None) -> ScenePartition:
    pool = _pool(ds, indices)
    train, test = [], []
    for part in _even_split(pool, num_clients, rng):
        tr, te = split_local(part, local_fraction, rng)
        train.append(tr)
        test.append(te)
    partition = ScenePartition(train, test)
    partition.validate(len(ds))
    return partition


def build_global_test(partition: ScenePartition, mode: str,
                      held_out: Optional[Sequence[int]] = None) -> np.ndarray:
    if mode == "union_of_local":
        if not partition.test:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(partition.test)
    if mode == "held_out":
        provided = held_out if held_out is not None else partition.held_out
        if provided is None:
            raise ConfigurationError("global test mode 'held_out' requires a held-out index set")
        return np.asarray(provided, dtype=np.int64)
    raise ConfigurationError(f"unknown global test mode '{mode}', expected one of {GLOBAL_TEST_MODES}")
