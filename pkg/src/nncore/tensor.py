"""
Tensor helpers: the simulator's numeric currency is a float64 numpy array
"""
from typing import Sequence, Tuple

import numpy as np

from src.utils.exceptions import ConfigurationError, NumericError

DTYPE = np.float64


def as_tensor(values, shape: Sequence[int] = None) -> np.ndarray:
    """Copy values into a C-contiguous float64 array, optionally reshaped"""
    arr = np.array(values, dtype=DTYPE, order="C")
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if int(np.prod(shape)) != arr.size:
            raise ConfigurationError(f"cannot view {arr.size} values as shape {shape}")
        arr = arr.reshape(shape)
    return arr


def check_finite(arr: np.ndarray, where: str) -> np.ndarray:
    """Raise NumericError if arr holds NaN or Inf"""
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values produced by {where}")
    return arr


def expect_rank(arr: np.ndarray, rank: int, where: str) -> None:
    if arr.ndim != rank:
        raise ConfigurationError(f"{where} expects a rank-{rank} input, got shape {arr.shape}")


def uniform_fan_in(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    """Uniform(-s, s) with s = sqrt(1 / fan_in)"""
    s = np.sqrt(1.0 / fan_in)
    return rng.uniform(-s, s, size=shape).astype(DTYPE)


def flatten_params(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate arrays into one flat float64 vector (empty for no arrays)"""
    if not arrays:
        return np.zeros(0, dtype=DTYPE)
    return np.concatenate([a.ravel() for a in arrays]).astype(DTYPE, copy=False)


def param_count(arrays: Sequence[np.ndarray]) -> int:
    return int(sum(a.size for a in arrays))


def unflatten_into(vector: np.ndarray, arrays: Sequence[np.ndarray]) -> None:
    """Copy a flat vector back into arrays in place (lengths checked by caller)"""
    offset = 0
    for a in arrays:
        n = a.size
        a[...] = vector[offset:offset + n].reshape(a.shape)
        offset += n
