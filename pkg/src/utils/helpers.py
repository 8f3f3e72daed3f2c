"""
Utility functions and helpers
"""
from typing import Iterable, Iterator, Sequence

import numpy as np

# Seed-stream tags; part of the reproducibility contract, never renumber.
STREAM_MODEL_INIT = 1
STREAM_CLIENT_INIT = 2
STREAM_ROUND_SAMPLING = 3
STREAM_CLIENT_ROUND = 4
STREAM_SCENE = 5
STREAM_CHECKS = 6


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the (seed, *keys) stream"""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def batched(indices: Sequence[int], batch_size: int) -> Iterator[np.ndarray]:
    """Yield consecutive slices of at most batch_size indices"""
    arr = np.asarray(indices, dtype=np.int64)
    for start in range(0, len(arr), batch_size):
        yield arr[start:start + batch_size]


def last_mean(values: Iterable[float], n: int = 5) -> float:
    """Mean of the last n values"""
    tail = list(values)[-n:]
    return float(sum(tail) / len(tail))


def lr_tag(lr: float) -> str:
    """File-name friendly learning-rate label: 0.03 -> '0.03'"""
    return repr(float(lr))


def format_duration(seconds: float) -> str:
    """Format duration in seconds to HH:MM:SS"""
    total = int(round(seconds))
    hours = total // 3600
    minutes = (total % 3600) // 60
    secs = total % 60

    if hours > 0:
        return f"{hours:02d}:{minutes:02d}:{secs:02d}"
    else:
        return f"{minutes:02d}:{secs:02d}"
