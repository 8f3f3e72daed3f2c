"""
Turns validated config sections into a Scene, a NetworkSplit and a way
"""
import logging
from typing import List, Union

from src.autofuse.params import AUTO_WAYS, FusionMode
from src.nncore.layers import Flatten, Layer
from src.scenes.dataset import Dataset, Scene
from src.scenes.fsds import load_dataset
from src.scenes.partition import (
    build_global_test,
    covariate_shift_partition,
    iid_partition,
    label_shift_partition,
    reserve_held_out,
)
from src.scenes.synth import synth_image_dataset, synth_label_dataset
from src.splitnet.network import NetworkSplit, build_cnn_layers, build_mlp_layers, coarse_boundaries, split_layers
from src.splitnet.ways import PrivatizationWay, enumerate_ways, format_way, parse_way
from src.utils.exceptions import ConfigurationError, WayParseError
from src.utils.helpers import STREAM_MODEL_INIT, STREAM_SCENE, derive_rng
from src.xcli.models import DataSource, ExperimentConfig, ModelConfig, PartitionKind, SceneConfig

logger = logging.getLogger(__name__)


def load_source(cfg: SceneConfig, rng) -> Dataset:
    if cfg.source is DataSource.FILE:
        return load_dataset(cfg.path)
    if cfg.source is DataSource.SYNTH_IMAGE:
        return synth_image_dataset(cfg.num_samples, cfg.num_classes, cfg.height, cfg.width, rng, noise=cfg.noise)
    return synth_label_dataset(cfg.num_samples, cfg.num_classes, cfg.dim, cfg.class_sep, rng, noise=cfg.noise)


def build_scene(cfg: SceneConfig, seed: int) -> Scene:
    """Dataset, optional held-out reservation, partition, global test set"""
    rng = derive_rng(seed, STREAM_SCENE)
    ds = load_source(cfg, rng)
    pool, held_out = None, None
    if cfg.global_test == "held_out":
        pool, held_out = reserve_held_out(ds, cfg.held_out_fraction, rng)

    if cfg.partition is PartitionKind.LABEL_SHIFT:
        partition = label_shift_partition(ds, cfg.num_clients, cfg.shards_per_class, cfg.shards_per_client, rng,
                                          cfg.local_fraction, indices=pool)
    elif cfg.partition is PartitionKind.COVARIATE_SHIFT:
        partition = covariate_shift_partition(ds, cfg.num_clients, cfg.strength, rng, cfg.local_fraction,
                                              indices=pool)
    else:
        partition = iid_partition(ds, cfg.num_clients, rng, cfg.local_fraction, indices=pool)

    partition.held_out = held_out
    partition.global_test = build_global_test(partition, cfg.global_test, held_out)
    logger.info(f"✅ scene: {cfg.partition.value}, K={partition.num_clients}, N={len(ds)}, "
                f"global test M={partition.global_test.size}")
    return Scene.build(ds, partition)


def build_layers(cfg: ModelConfig, scene: Scene, rng) -> List[Layer]:
    ds = scene.dataset
    shape = ds.sample_shape
    if cfg.kind == "cnn":
        if len(shape) != 3:
            raise ConfigurationError(f"model.kind = 'cnn' needs [channels, H, W] samples, data has shape {shape}")
        return build_cnn_layers(shape[0], shape[1], shape[2], cfg.conv_channels, cfg.kernel_size, cfg.hidden,
                                ds.num_classes, rng)
    d_in = 1
    for size in shape:
        d_in *= size
    layers = build_mlp_layers(d_in, cfg.hidden, ds.num_classes, rng)
    return [Flatten(), *layers] if len(shape) > 1 else layers


def build_split(cfg: ModelConfig, scene: Scene, seed: int) -> NetworkSplit:
    layers = build_layers(cfg, scene, derive_rng(seed, STREAM_MODEL_INIT))
    boundaries = cfg.boundaries
    if boundaries is None and cfg.split == "coarse":
        boundaries = coarse_boundaries(layers)
    split = split_layers(layers, boundaries)
    logger.debug(f"split L={split.num_blocks}: {split.describe()}")
    return split


def resolve_way(name: str, num_blocks: int, key: str = "way") -> Union[PrivatizationWay, FusionMode]:
    """A way name for this split, or an automatic fusion mode; key names where the value came from"""
    if name in AUTO_WAYS:
        if num_blocks < 2:
            raise ConfigurationError(f"{key} '{name}' needs at least two blocks, split has L={num_blocks}")
        return AUTO_WAYS[name]
    try:
        return parse_way(name, num_blocks)
    except WayParseError as e:
        raise ConfigurationError(f"invalid value for key '{key}': {e}") from e


def all_way_names(num_blocks: int) -> List[str]:
    return [format_way(way, num_blocks) for way in enumerate_ways(num_blocks)]


def expected_blocks(cfg: ModelConfig) -> int:
    """Block count L implied by the model section, known before any data is built"""
    if cfg.boundaries is not None:
        return len(cfg.boundaries) + 1
    if cfg.split == "coarse":
        return 2
    convs = len(cfg.conv_channels) if cfg.kind == "cnn" else 0
    return convs + len(cfg.hidden) + 1


def validate_ways(config: ExperimentConfig) -> int:
    """Resolve every way name the config mentions; returns L"""
    num_blocks = expected_blocks(config.model)
    resolve_way(config.way, num_blocks)
    for name in config.compare.ways or []:
        resolve_way(name, num_blocks, key="compare.ways")
    return num_blocks
