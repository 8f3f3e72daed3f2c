"""
Dataset container and client partition records
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.utils.exceptions import ConfigurationError, DataError


@dataclass
class Dataset:
    """features [N, ...] float64, labels [N] in [0, C)"""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim < 2 or self.features.shape[0] < 1:
            raise DataError(f"dataset needs at least one sample with features, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DataError(f"{self.labels.size} labels for {self.features.shape[0]} samples")
        if self.num_classes < 1:
            raise DataError(f"class count must be positive, got {self.num_classes}")
        bad = np.flatnonzero((self.labels < 0) | (self.labels >= self.num_classes))
        if bad.size:
            raise DataError(f"record {int(bad[0])}: label {int(self.labels[bad[0]])} outside [0, {self.num_classes})")

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def sample_shape(self):
        return tuple(self.features.shape[1:])

    def take(self, indices: Sequence[int]):
        idx = np.asarray(indices, dtype=np.int64)
        return self.features[idx], self.labels[idx]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


@dataclass
class AffineTransform:
    """x -> R x + t on flattened features"""

    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, features: np.ndarray) -> np.ndarray:
        flat = features.reshape(features.shape[0], -1)
        return (flat @ self.rotation.T + self.translation).reshape(features.shape)


@dataclass
class ScenePartition:
    """Per-client train/test index lists into one parent dataset"""

    train: List[np.ndarray]
    test: List[np.ndarray]
    held_out: Optional[np.ndarray] = None
    transforms: Optional[List[AffineTransform]] = None
    global_test: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        if len(self.train) != len(self.test):
            raise ConfigurationError("train and test lists must cover the same clients")
        self.train = [np.asarray(t, dtype=np.int64) for t in self.train]
        self.test = [np.asarray(t, dtype=np.int64) for t in self.test]

    @property
    def num_clients(self) -> int:
        return len(self.train)

    def client_indices(self, k: int) -> np.ndarray:
        return np.concatenate([self.train[k], self.test[k]])

    def validate(self, size: int) -> None:
        """Invariants: valid indices, local splits disjoint, train sets pairwise disjoint"""
        seen = np.zeros(size, dtype=bool)
        for k in range(self.num_clients):
            for idx in (self.train[k], self.test[k]):
                if idx.size and (idx.min() < 0 or idx.max() >= size):
                    raise ConfigurationError(f"client {k} holds an index outside [0, {size})")
            if np.intersect1d(self.train[k], self.test[k]).size:
                raise ConfigurationError(f"client {k} train and test overlap")
            if seen[self.train[k]].any():
                raise ConfigurationError(f"client {k} shares training samples with another client")
            seen[self.train[k]] = True

    def materialize(self, dataset: Dataset) -> Dataset:
        """Apply per-client feature transforms (covariate scenes); identity otherwise"""
        if not self.transforms:
            return dataset
        features = dataset.features.copy()
        for k, transform in enumerate(self.transforms):
            owned = self.client_indices(k)
            if owned.size:
                features[owned] = transform.apply(dataset.features[owned])
        return Dataset(features, dataset.labels.copy(), dataset.num_classes)


@dataclass
class Scene:
    """Materialized dataset, its client partition and the global test indices"""

    dataset: Dataset
    partition: ScenePartition
    global_test: np.ndarray

    @classmethod
    def build(cls, dataset: Dataset, partition: ScenePartition,
              global_test: Optional[Sequence[int]] = None) -> "Scene":
        if global_test is None:
            global_test = partition.global_test
        return cls(partition.materialize(dataset), partition, np.asarray(global_test, dtype=np.int64))

    @property
    def num_clients(self) -> int:
        return self.partition.num_clients

    def client_train(self, k: int):
        return self.dataset.take(self.partition.train[k])

    def client_test(self, k: int):
        return self.dataset.take(self.partition.test[k])

    def global_test_data(self):
        return self.dataset.take(self.global_test)
