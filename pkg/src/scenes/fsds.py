"""
FSDS binary dataset format.

Layout (little-endian): b"FSDS", u32 version=1, u64 N, u32 rank,
u32 dims[rank], u32 C, N*prod(dims) f32 features, N u16 labels.
"""
import logging
import math
import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from src.scenes.dataset import Dataset
from src.storage.result_storage import atomic_write_bytes
from src.utils.exceptions import FormatError

logger = logging.getLogger(__name__)

MAGIC = b"FSDS"
VERSION = 1
MAX_LABEL = np.iinfo(np.uint16).max


def encode_dataset(ds: Dataset) -> bytes:
    if ds.num_classes > MAX_LABEL + 1:
        raise FormatError(f"FSDS stores labels as u16; {ds.num_classes} classes do not fit")
    dims = ds.sample_shape
    header = MAGIC + struct.pack("<IQI", VERSION, len(ds), len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims) + struct.pack("<I", ds.num_classes)
    features = ds.features.astype("<f4").tobytes()
    labels = ds.labels.astype("<u2").tobytes()
    return header + features + labels


def decode_dataset(raw: bytes) -> Dataset:
    def need(offset: int, size: int, what: str) -> None:
        if offset + size > len(raw):
            raise FormatError(f"truncated file while reading {what}", offset)

    need(0, 4, "magic")
    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}", 0)
    need(4, 16, "header")
    version, n, rank = struct.unpack_from("<IQI", raw, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if n < 1:
        raise FormatError("file holds no records", 8)
    offset = 20
    need(offset, 4 * rank + 4, "dims")
    dims = struct.unpack_from(f"<{rank}I", raw, offset)
    offset += 4 * rank
    (num_classes,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if rank < 1 or any(d == 0 for d in dims):
        raise FormatError(f"empty feature shape {tuple(dims)}", 16)
    if num_classes < 1:
        raise FormatError("class count must be positive", offset - 4)

    width = math.prod(dims)
    need(offset, 4 * n * width, "features")
    features = np.frombuffer(raw, dtype="<f4", count=n * width, offset=offset).astype(np.float64)
    offset += 4 * n * width
    need(offset, 2 * n, "labels")
    labels = np.frombuffer(raw, dtype="<u2", count=n, offset=offset).astype(np.int64)
    bad = np.flatnonzero(labels >= num_classes)
    if bad.size:
        record = int(bad[0])
        raise FormatError(f"record {record}: label {int(labels[record])} >= C={num_classes}", offset + 2 * record)
    if offset + 2 * n != len(raw):
        raise FormatError(f"{len(raw) - offset - 2 * n} trailing bytes", offset + 2 * n)
    return Dataset(features.reshape((n, *dims)), labels, num_classes)


def save_dataset(ds: Dataset, path: Union[str, Path]) -> None:
    atomic_write_bytes(Path(path), encode_dataset(ds))
    logger.info(f"✅ Saved {len(ds)} samples to {path}")


def load_dataset(path: Union[str, Path]) -> Dataset:
    if not os.path.exists(path):
        raise FormatError(f"dataset file not found: {path}")
    with open(path, "rb") as f:
        return decode_dataset(f.read())
