"""
Partition statistics: label heatmap, per-client sample counts, scene summary
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from src.scenes.dataset import Dataset, ScenePartition


@dataclass
class StatsReport:
    histogram: np.ndarray        # [K, C] label counts over each client's train + test
    sample_counts: np.ndarray    # [K]
    class_totals: np.ndarray     # [C] over the partitioned pool
    held_out_totals: np.ndarray  # [C] over the reserved global test set; zeros if none

    def to_frame(self) -> pd.DataFrame:
        """Long format: client,class,count"""
        k, c = self.histogram.shape
        return pd.DataFrame({
            "client": np.repeat(np.arange(k), c),
            "class": np.tile(np.arange(c), k),
            "count": self.histogram.reshape(-1),
        })

    def classes_per_client(self) -> np.ndarray:
        return (self.histogram > 0).sum(axis=1)


def partition_stats(partition: ScenePartition, ds: Dataset) -> StatsReport:
    """Column sums of the histogram equal class_totals; class_totals + held_out_totals cover the parent"""
    owned = [partition.client_indices(k) for k in range(partition.num_clients)]
    rows = [np.bincount(ds.labels[idx], minlength=ds.num_classes) for idx in owned]
    histogram = np.vstack(rows).astype(np.int64) if rows else np.zeros((0, ds.num_classes), dtype=np.int64)
    pool = np.concatenate(owned) if owned else np.zeros(0, dtype=np.int64)
    class_totals = np.bincount(ds.labels[pool], minlength=ds.num_classes).astype(np.int64)
    held = partition.held_out if partition.held_out is not None else np.zeros(0, dtype=np.int64)
    held_out_totals = np.bincount(ds.labels[held], minlength=ds.num_classes).astype(np.int64)
    return StatsReport(histogram, histogram.sum(axis=1), class_totals, held_out_totals)


def scene_summary(partition: ScenePartition, ds: Dataset, global_test: Optional[np.ndarray] = None) -> pd.DataFrame:
    """One row: K, C, mean local train size, mean local test size, global test size M"""
    train_sizes = [t.size for t in partition.train]
    test_sizes = [t.size for t in partition.test]
    m = int(global_test.size) if global_test is not None else int(sum(test_sizes))
    return pd.DataFrame([{
        "K": partition.num_clients,
        "C": ds.num_classes,
        "mean_train": float(np.mean(train_sizes)) if train_sizes else 0.0,
        "mean_test": float(np.mean(test_sizes)) if test_sizes else 0.0,
        "M": m,
    }])
