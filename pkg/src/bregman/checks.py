"""
Numerical checks of the Bregman results behind parameter averaging:

  * the weighted mixture of client distributions minimizes the weighted
    Bregman sum (grid search over the simplex)
  * mixing shared and private predictions is upper-bounded by the mixture
    of their losses (joint convexity)
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
import pandas as pd

from src.bregman.divergence import GeneratorF, as_simplex, bregman_div, kl_divergence, simplex_grid, \
    weighted_divergence_surface
from src.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

BOUND_TOLERANCE = 1e-10
KL_TOLERANCE = 1e-12
DEFAULT_RESOLUTION = 0.01
# interior margin for random draws so KL stays finite
_INTERIOR = 1e-3


@dataclass
class CheckResult:
    check: str
    generator: str
    max_violation: float
    passed: bool

    def as_row(self) -> dict:
        return {"check": self.check, "generator": self.generator,
                "max_violation": self.max_violation, "pass": self.passed}


@dataclass
class LemmaReport:
    generator: GeneratorF
    mixture: np.ndarray        # sum_k p_k D^k
    grid_argmin: np.ndarray
    distance: float            # L-inf between the two
    resolution: float
    uniqueness_margin: float   # min surface beyond 2r minus value at the mixture

    @property
    def within_cell(self) -> bool:
        return self.distance <= self.resolution + 1e-12

    @property
    def unique(self) -> bool:
        return self.uniqueness_margin > 0

    @property
    def passed(self) -> bool:
        return self.within_cell and self.unique


@dataclass
class BoundReport:
    generator: GeneratorF
    alpha: float
    mixed_loss: float
    bound: float

    @property
    def violation(self) -> float:
        return self.mixed_loss - self.bound

    @property
    def passed(self) -> bool:
        return self.violation <= BOUND_TOLERANCE


def _weights(weights: Sequence[float], count: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (count,):
        raise ConfigurationError(f"{w.size} weights for {count} distributions")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ConfigurationError(f"weights must be non-negative and sum to 1, got {w.tolist()}")
    return w


def _stack(distributions: Sequence) -> np.ndarray:
    if not distributions:
        raise ConfigurationError("need at least one distribution")
    rows = [as_simplex(d, f"D^{k}") for k, d in enumerate(distributions)]
    if len({r.size for r in rows}) != 1:
        raise ConfigurationError("distributions differ in length")
    return np.vstack(rows)


def check_lemma_minimizer(distributions: Sequence, weights: Sequence[float],
                          resolution: float = DEFAULT_RESOLUTION,
                          generators: Iterable[GeneratorF] = tuple(GeneratorF)) -> List[LemmaReport]:
    """Grid argmin of sum_k p_k B_F(D^k || h) against the mixture sum_k p_k D^k"""
    dists = _stack(distributions)
    w = _weights(weights, dists.shape[0])
    grid = simplex_grid(dists.shape[1], resolution)
    mixture = w @ dists
    far = np.abs(grid - mixture).max(axis=1) > 2 * resolution

    reports = []
    for generator in generators:
        surface = weighted_divergence_surface(generator, dists, w, grid)
        argmin = grid[int(np.argmin(surface))]
        at_mixture = float(weighted_divergence_surface(generator, dists, w, mixture[None, :])[0])
        margin = float(surface[far].min() - at_mixture) if far.any() else float("inf")
        reports.append(LemmaReport(GeneratorF(generator), mixture, argmin,
                                   float(np.abs(argmin - mixture).max()), resolution, margin))
    return reports


def check_ps_upper_bound(distributions: Sequence, weights: Sequence[float], h_s, h_p: Sequence, alpha: float,
                         generator: GeneratorF) -> BoundReport:
    """sum p_k B(D^k || (1-a) h_s + a h_p^k) <= (1-a) sum p_k B(D^k || h_s) + a sum p_k B(D^k || h_p^k)"""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha={alpha} outside [0, 1]")
    dists = _stack(distributions)
    w = _weights(weights, dists.shape[0])
    if len(h_p) != dists.shape[0]:
        raise ConfigurationError(f"{len(h_p)} private predictions for {dists.shape[0]} clients")
    h_s = as_simplex(h_s, "h_s")
    mixed = shared = private = 0.0
    for k, d in enumerate(dists):
        hp = as_simplex(h_p[k], f"h_p^{k}")
        mixed += w[k] * bregman_div(generator, d, (1.0 - alpha) * h_s + alpha * hp)
        shared += w[k] * bregman_div(generator, d, h_s)
        private += w[k] * bregman_div(generator, d, hp)
    return BoundReport(GeneratorF(generator), alpha, mixed, (1.0 - alpha) * shared + alpha * private)


def random_simplex(rng: np.random.Generator, num_classes: int, size: int = 1) -> np.ndarray:
    """Dirichlet(1) draws pulled slightly into the interior"""
    raw = rng.dirichlet(np.ones(num_classes), size=size)
    mixed = (1.0 - _INTERIOR * num_classes) * raw + _INTERIOR
    return mixed / mixed.sum(axis=1, keepdims=True)


def _corner(rng: np.random.Generator, num_classes: int, eps: float) -> np.ndarray:
    """A distribution hugging a random vertex"""
    p = np.full(num_classes, eps)
    p[int(rng.integers(num_classes))] = 1.0 - eps * (num_classes - 1)
    return p


def randomized_upper_bound(rng: np.random.Generator, trials: int = 1000, num_classes: int = 3,
                           num_clients: int = 3,
                           generators: Iterable[GeneratorF] = tuple(GeneratorF)) -> List[CheckResult]:
    """Random draws, with every fourth trial pushed to adversarial vertices and alpha endpoints"""
    results = []
    for generator in generators:
        worst = -np.inf
        for trial in range(trials):
            weights = rng.dirichlet(np.ones(num_clients))
            if trial % 4 == 3:
                eps = float(10.0 ** rng.uniform(-9, -3))
                dists = [_corner(rng, num_classes, eps) for _ in range(num_clients)]
                h_s = _corner(rng, num_classes, eps)
                h_p = [_corner(rng, num_classes, eps) for _ in range(num_clients)]
                alpha = float(rng.choice([0.0, 1.0, rng.uniform()]))
            else:
                dists = list(random_simplex(rng, num_classes, num_clients))
                h_s = random_simplex(rng, num_classes)[0]
                h_p = list(random_simplex(rng, num_classes, num_clients))
                alpha = float(rng.uniform())
            report = check_ps_upper_bound(dists, weights, h_s, h_p, alpha, generator)
            worst = max(worst, report.violation)
        results.append(CheckResult("ps_upper_bound", GeneratorF(generator).value, float(worst),
                                   bool(worst <= BOUND_TOLERANCE)))
    return results


def divergence_sanity(rng: np.random.Generator, pairs: int = 1000, num_classes: int = 3) -> List[CheckResult]:
    """Non-negativity, identity of indiscernibles and KL agreement on random pairs"""
    results = []
    d_all = random_simplex(rng, num_classes, pairs)
    h_all = random_simplex(rng, num_classes, pairs)
    for generator in GeneratorF:
        worst = 0.0
        for d, h in zip(d_all, h_all):
            worst = max(worst, -bregman_div(generator, d, h), abs(bregman_div(generator, d, d)))
        results.append(CheckResult("nonnegative_identity", generator.value, worst, worst <= KL_TOLERANCE))
    gap = max(abs(bregman_div(GeneratorF.NEG_ENTROPY, d, h) - kl_divergence(d, h)) for d, h in zip(d_all, h_all))
    results.append(CheckResult("kl_equivalence", GeneratorF.NEG_ENTROPY.value, float(gap), gap <= KL_TOLERANCE))
    return results


def lemma_suite(rng: np.random.Generator, num_classes: int = 3, resolution: float = DEFAULT_RESOLUTION,
                cases: int = 5) -> List[CheckResult]:
    """Opposite vertices at equal weight, then random client mixtures"""
    problems = [([np.eye(num_classes)[0], np.eye(num_classes)[1]], [0.5, 0.5])]
    for _ in range(cases):
        count = int(rng.integers(2, 5))
        problems.append((list(random_simplex(rng, num_classes, count)), rng.dirichlet(np.ones(count))))

    worst = {g: 0.0 for g in GeneratorF}
    passed = {g: True for g in GeneratorF}
    for dists, weights in problems:
        for report in check_lemma_minimizer(dists, weights, resolution):
            worst[report.generator] = max(worst[report.generator], report.distance - resolution, 0.0)
            passed[report.generator] &= report.passed
            if not report.passed:
                logger.warning(f"⚠️ lemma check failed for {report.generator.value}: argmin "
                               f"{report.grid_argmin.tolist()} vs mixture {report.mixture.tolist()}")
    return [CheckResult("lemma_minimizer", g.value, worst[g], passed[g]) for g in GeneratorF]


def report_frame(results: Sequence[CheckResult]) -> pd.DataFrame:
    """check,generator,max_violation,pass"""
    return pd.DataFrame([r.as_row() for r in results], columns=["check", "generator", "max_violation", "pass"])


def run_bregman_suite(rng: np.random.Generator, trials: int = 1000,
                      resolution: float = DEFAULT_RESOLUTION) -> List[CheckResult]:
    return divergence_sanity(rng, trials) + lemma_suite(rng, resolution=resolution) + randomized_upper_bound(rng, trials)
