"""Datasets, partitioners and partition statistics"""
from src.scenes.dataset import AffineTransform, Dataset, Scene, ScenePartition
from src.scenes.fsds import load_dataset, save_dataset
from src.scenes.partition import (
    build_global_test,
    covariate_shift_partition,
    iid_partition,
    label_shift_partition,
    reserve_held_out,
    split_local,
)
from src.scenes.stats import StatsReport, partition_stats, scene_summary
from src.scenes.synth import synth_image_dataset, synth_label_dataset

__all__ = [
    "AffineTransform", "Dataset", "Scene", "ScenePartition", "load_dataset", "save_dataset", "build_global_test",
    "covariate_shift_partition", "iid_partition", "label_shift_partition", "reserve_held_out", "split_local",
    "StatsReport", "partition_stats", "scene_summary", "synth_image_dataset", "synth_label_dataset",
]
