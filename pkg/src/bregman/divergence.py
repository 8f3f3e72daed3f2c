"""
Bregman divergences on the probability simplex
"""
from enum import Enum
from math import comb
from typing import Iterator

import numpy as np

from src.utils.exceptions import ConfigurationError, DomainError

SIMPLEX_TOLERANCE = 1e-12
MAX_GRID_POINTS = 2_000_000


class GeneratorF(str, Enum):
    """Strictly convex generators: B_F is squared distance or KL"""

    SQUARED_NORM = "SquaredNorm"
    NEG_ENTROPY = "NegEntropy"

    def evaluate(self, p: np.ndarray) -> float:
        if self is GeneratorF.SQUARED_NORM:
            return float(np.dot(p, p))
        nz = p > 0
        return float(np.sum(p[nz] * np.log(p[nz])))

    def gradient(self, q: np.ndarray) -> np.ndarray:
        if self is GeneratorF.SQUARED_NORM:
            return 2.0 * q
        if np.any(q <= 0):
            raise DomainError("negative entropy gradient needs a point in the simplex interior")
        return np.log(q) + 1.0


def as_simplex(p, what: str = "distribution") -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise ConfigurationError(f"{what} must be a non-empty vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > SIMPLEX_TOLERANCE:
        raise ConfigurationError(f"{what} is not on the probability simplex: {p.tolist()}")
    return p


def bregman_div(generator: GeneratorF, d, h) -> float:
    """F(d) - F(h) - <grad F(h), d - h>"""
    generator = GeneratorF(generator)
    d, h = as_simplex(d, "d"), as_simplex(h, "h")
    if d.shape != h.shape:
        raise ConfigurationError(f"distributions differ in length: {d.size} vs {h.size}")
    if generator is GeneratorF.SQUARED_NORM:
        diff = d - h
        return float(np.dot(diff, diff))
    if np.any(h <= 0):
        raise DomainError(f"KL needs h in the simplex interior, got {h.tolist()}")
    value = generator.evaluate(d) - generator.evaluate(h) - float(np.dot(generator.gradient(h), d - h))
    # rounding can leave a tiny negative
    return max(value, 0.0)


def kl_divergence(d, h) -> float:
    """Direct sum d_i log(d_i / h_i), zero terms skipped"""
    d, h = np.asarray(d, dtype=np.float64), np.asarray(h, dtype=np.float64)
    nz = d > 0
    return float(np.sum(d[nz] * np.log(d[nz] / h[nz])))


def simplex_grid_size(num_classes: int, resolution: float) -> int:
    steps = int(round(1.0 / resolution))
    return comb(steps + num_classes - 1, num_classes - 1)


def simplex_grid(num_classes: int, resolution: float) -> np.ndarray:
    """Barycentric lattice {k * r : sum = 1}, one point per row"""
    if num_classes < 1:
        raise ConfigurationError(f"class count must be positive, got {num_classes}")
    steps = int(round(1.0 / resolution))
    if steps < 1 or abs(steps * resolution - 1.0) > 1e-9:
        raise ConfigurationError(f"grid resolution {resolution} must divide 1")
    size = simplex_grid_size(num_classes, resolution)
    if size > MAX_GRID_POINTS:
        raise ConfigurationError(f"simplex grid with C={num_classes}, r={resolution} has {size} points")
    points = np.array(list(_compositions(steps, num_classes)), dtype=np.float64)
    return points / steps


def _compositions(total: int, parts: int) -> Iterator[tuple]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def weighted_divergence_surface(generator: GeneratorF, distributions: np.ndarray, weights: np.ndarray,
                                points: np.ndarray) -> np.ndarray:
    """sum_k p_k B_F(D^k || h) at every row h of points; +inf where KL is unbounded"""
    generator = GeneratorF(generator)
    if generator is GeneratorF.SQUARED_NORM:
        diff = distributions[None, :, :] - points[:, None, :]
        return np.einsum("k,gk->g", weights, np.sum(diff * diff, axis=2))
    safe_d = np.where(distributions > 0, distributions, 1.0)
    entropy_part = np.sum(np.where(distributions > 0, distributions * np.log(safe_d), 0.0), axis=1)
    safe_h = np.where(points > 0, points, 1.0)
    surface = (entropy_part[None, :] - np.log(safe_h) @ distributions.T) @ weights
    # h_i = 0 is only admissible where every weighted D^k_i is 0
    mass = (weights > 0).astype(np.float64) @ (distributions > 0).astype(np.float64)
    unbounded = np.any((points <= 0) & (mass[None, :] > 0), axis=1)
    surface[unbounded] = np.inf
    return surface
