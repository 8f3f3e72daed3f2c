"""
Synthetic data sources for desk-scale scenes
"""
import numpy as np

from src.scenes.dataset import Dataset
from src.utils.exceptions import ConfigurationError


def _f32_exact(values: np.ndarray) -> np.ndarray:
    """Round to float32-representable values so FSDS files reload bit-exactly"""
    return values.astype(np.float32).astype(np.float64)


def _balanced_labels(n: int, num_classes: int, rng: np.random.Generator) -> np.ndarray:
    labels = np.arange(n, dtype=np.int64) % num_classes
    return labels[rng.permutation(n)]


def _class_directions(num_classes: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vectors per class; orthonormal whenever dim >= C"""
    raw = rng.normal(size=(dim, num_classes))
    if dim >= num_classes:
        q, _ = np.linalg.qr(raw)
        return q[:, :num_classes].T.copy()
    return (raw / np.linalg.norm(raw, axis=0, keepdims=True)).T.copy()


def synth_label_dataset(n: int, num_classes: int, dim: int, class_sep: float,
                        rng: np.random.Generator, noise: float = 1.0) -> Dataset:
    """Gaussian blobs: x = class_sep * u_y + noise * N(0, I)"""
    if n < num_classes:
        raise ConfigurationError(f"need N >= C, got N={n}, C={num_classes}")
    if dim < 1 or num_classes < 1:
        raise ConfigurationError("dimension and class count must be positive")
    centers = class_sep * _class_directions(num_classes, dim, rng)
    labels = _balanced_labels(n, num_classes, rng)
    features = centers[labels] + noise * rng.normal(size=(n, dim))
    return Dataset(_f32_exact(features), labels, num_classes)


def synth_image_dataset(n: int, num_classes: int, height: int, width: int,
                        rng: np.random.Generator, noise: float = 0.5, amplitude: float = 1.0) -> Dataset:
    """Single-channel images: a smooth per-class template plus pixel noise"""
    if n < num_classes:
        raise ConfigurationError(f"need N >= C, got N={n}, C={num_classes}")
    if height < 1 or width < 1:
        raise ConfigurationError(f"image size must be positive, got {height}x{width}")
    coarse = rng.normal(size=(num_classes, (height + 1) // 2, (width + 1) // 2))
    templates = np.repeat(np.repeat(coarse, 2, axis=1), 2, axis=2)[:, :height, :width]
    labels = _balanced_labels(n, num_classes, rng)
    images = amplitude * templates[labels] + noise * rng.normal(size=(n, height, width))
    return Dataset(_f32_exact(images[:, None, :, :]), labels, num_classes)
