"""
Softmax cross-entropy loss
"""
from typing import Sequence, Tuple

import numpy as np

from src.nncore.tensor import check_finite, expect_rank
from src.utils.exceptions import ConfigurationError, DataError, NumericError


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable for large logits"""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_softmax_ce(logits: np.ndarray, labels: Sequence[int]) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. logits"""
    expect_rank(logits, 2, "loss_softmax_ce")
    batch, num_classes = logits.shape
    labels = np.asarray(labels, dtype=np.int64)
    if batch < 1:
        raise ConfigurationError("loss_softmax_ce needs a non-empty batch")
    if labels.shape != (batch,):
        raise ConfigurationError(f"labels of shape {labels.shape} for a batch of {batch}")
    bad = np.flatnonzero((labels < 0) | (labels >= num_classes))
    if bad.size:
        raise DataError(f"label {int(labels[bad[0]])} at row {int(bad[0])} outside [0, {num_classes})")

    log_probs = log_softmax(logits)
    rows = np.arange(batch)
    loss = float(-log_probs[rows, labels].mean())
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad /= batch
    check_finite(grad, "loss_softmax_ce")
    if not np.isfinite(loss):
        raise NumericError("loss_softmax_ce produced a non-finite loss")
    return loss, grad
