"""
Post-hoc interpolation between the shared and private branches of a trained
full double-branch model.

alpha mixes encoder features, beta mixes the two classifiers' probabilities:
    h = alpha * h_s + (1 - alpha) * h_p
    p = beta * softmax(C_s(h)) + (1 - beta) * softmax(C_p(h))
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.autofuse.model import AutoFuseModel
from src.nncore.layers import Layer, run_layers
from src.nncore.losses import softmax
from src.splitnet.client_model import ClientModel
from src.splitnet.ways import FULLY_SHARED, WayKind, canonical, format_way
from src.utils.exceptions import ConfigurationError, UsageError
from src.utils.helpers import batched

logger = logging.getLogger(__name__)

DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(11))

Branches = Tuple[List[Layer], List[Layer], List[Layer], List[Layer]]


@dataclass
class InterpGrid:
    alphas: np.ndarray
    betas: np.ndarray
    acc: np.ndarray  # [len(alphas), len(betas)]

    def to_frame(self) -> pd.DataFrame:
        """Heatmap data: alpha,beta,local_acc"""
        return pd.DataFrame({
            "alpha": np.repeat(self.alphas, self.betas.size),
            "beta": np.tile(self.betas, self.alphas.size),
            "local_acc": self.acc.reshape(-1),
        })

    def cell(self, alpha: float, beta: float) -> float:
        i = int(np.flatnonzero(self.alphas == alpha)[0])
        j = int(np.flatnonzero(self.betas == beta)[0])
        return float(self.acc[i, j])


@dataclass
class Recommendation:
    alpha: float
    beta: float
    way: str
    accuracy: float


def check_grid(values: Sequence[float], what: str) -> np.ndarray:
    grid = np.asarray(values, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise ConfigurationError(f"{what} grid needs at least the points 0 and 1")
    if np.any(grid < 0.0) or np.any(grid > 1.0):
        raise ConfigurationError(f"{what} grid values must lie in [0, 1]")
    if np.any(np.diff(grid) <= 0):
        raise ConfigurationError(f"{what} grid must be strictly increasing")
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise ConfigurationError(f"{what} grid must contain 0 and 1")
    return grid


def _flat(blocks) -> List[Layer]:
    return [layer for block in blocks for layer in block]


def branches(model) -> Branches:
    """(encoder_s, classifier_s, encoder_p, classifier_p) of a full double-branch model"""
    if isinstance(model, AutoFuseModel):
        return model.encoder_s, model.classifier_s, model.encoder_p, model.classifier_p
    if isinstance(model, ClientModel) and model.way == canonical(WayKind.SSP, 1) and model.num_blocks >= 2:
        cut = model.num_blocks - 1
        return (_flat(model.shared_blocks[:cut]), _flat(model.shared_blocks[cut:]),
                _flat(model.private_blocks[:cut]), _flat(model.private_blocks[cut:]))
    raise UsageError("interpolation needs a model trained under the full double-branch way (L >= 2)")


def _features(model, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Branches]:
    parts = branches(model)
    return run_layers(parts[0], x), run_layers(parts[2], x), parts


def _check_unit(value: float, what: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise UsageError(f"{what}={value} outside [0, 1]")


def interp_predict(model, x: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Mixed probabilities at one (alpha, beta) point"""
    _check_unit(alpha, "alpha")
    _check_unit(beta, "beta")
    h_s, h_p, (_, classifier_s, _, classifier_p) = _features(model, x)
    h = alpha * h_s + (1.0 - alpha) * h_p
    return beta * softmax(run_layers(classifier_s, h)) + (1.0 - beta) * softmax(run_layers(classifier_p, h))


def _client_grid(model, x: np.ndarray, y: np.ndarray, alphas: np.ndarray, betas: np.ndarray,
                 batch_size: int) -> np.ndarray:
    correct = np.zeros((alphas.size, betas.size))
    for idx in batched(np.arange(x.shape[0]), batch_size):
        h_s, h_p, (_, classifier_s, _, classifier_p) = _features(model, x[idx])
        for i, alpha in enumerate(alphas):
            h = alpha * h_s + (1.0 - alpha) * h_p
            p_s = softmax(run_layers(classifier_s, h))
            p_p = softmax(run_layers(classifier_p, h))
            for j, beta in enumerate(betas):
                mixed = beta * p_s + (1.0 - beta) * p_p
                correct[i, j] += np.sum(np.argmax(mixed, axis=1) == y[idx])
    return correct / x.shape[0]


def interp_sweep(clients: Sequence, alphas: Sequence[float] = DEFAULT_GRID,
                 betas: Sequence[float] = DEFAULT_GRID, batch_size: int = 512) -> InterpGrid:
    """Mean local-test accuracy over clients at every grid point; no parameter changes"""
    alphas, betas = check_grid(alphas, "alpha"), check_grid(betas, "beta")
    grids = []
    for client in clients:
        if client.num_test == 0:
            logger.warning(f"⚠️ client {client.client_id} has no local test samples; excluded from sweep")
            continue
        grids.append(_client_grid(client.model, client.test_x, client.test_y, alphas, betas, batch_size))
    if not grids:
        raise UsageError("no client with a local test set to sweep")
    return InterpGrid(alphas, betas, np.mean(grids, axis=0))


def recommend_way(grid: InterpGrid, num_blocks: int = 2) -> Recommendation:
    """Best cell; ties prefer larger alpha, then larger beta (more sharing)"""
    if grid.acc.size == 0:
        raise UsageError("empty interpolation grid")
    best = max(
        ((float(grid.acc[i, j]), float(a), float(b)) for i, a in enumerate(grid.alphas) for j, b in enumerate(grid.betas))
    )
    accuracy, alpha, beta = best
    if alpha == 1.0 and beta == 1.0:
        way = FULLY_SHARED
    elif beta == 1.0:
        way = canonical(WayKind.SPS, num_blocks)
    elif alpha == 1.0:
        way = canonical(WayKind.SSP, num_blocks)
    else:
        way = canonical(WayKind.SSP, 1)
    return Recommendation(alpha, beta, format_way(way, num_blocks), accuracy)
