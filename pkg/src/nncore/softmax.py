"""
Two-way (Gumbel-)softmax with temperature, the primitive behind every fusion weight
"""
import math
from typing import Tuple

import numpy as np

from src.utils.exceptions import ConfigurationError

GUMBEL_CLAMP = 1e-12
# sigmoid(±30) keeps both weights strictly inside (0, 1) in float64
_LOGIT_LIMIT = 30.0


def _sigmoid(z: float) -> float:
    """Logistic function with z clamped to [-30, 30]; flat outside that range"""
    z = min(max(z, -_LOGIT_LIMIT), _LOGIT_LIMIT)
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def softmax_pair(a0: float, a1: float, temperature: float) -> Tuple[float, float]:
    """(w0, w1) = SoftMax(a0/λ, a1/λ); w1 is computed as 1 - w0"""
    if not temperature > 0:
        raise ConfigurationError(f"temperature must be positive, got {temperature}")
    w0 = _sigmoid((float(a0) - float(a1)) / temperature)
    return w0, 1.0 - w0


def softmax_pair_backward(w0: float, w1: float, temperature: float,
                          grad_w0: float, grad_w1: float) -> Tuple[float, float]:
    """Chain dL/dw0, dL/dw1 back to the raw pair (a0, a1)

    Uses the analytic w0 * w1 / temperature. Once |a0 - a1| / temperature passes the
    sigmoid clamp the forward weights stop moving, yet this still returns about 1e-13
    per unit upstream gradient, so the gradient is approximate in that saturated region.
    """
    scale = w0 * w1 / temperature
    grad_a0 = (grad_w0 - grad_w1) * scale
    return grad_a0, -grad_a0


def sample_gumbel_pair(rng: np.random.Generator) -> Tuple[float, float]:
    """g = -log(-log u), u ~ Uniform(0,1) clamped away from {0, 1}"""
    u = np.clip(rng.uniform(size=2), GUMBEL_CLAMP, 1.0 - GUMBEL_CLAMP)
    g = -np.log(-np.log(u))
    return float(g[0]), float(g[1])


def gumbel_softmax_pair(a0: float, a1: float, temperature: float,
                        rng: np.random.Generator) -> Tuple[float, float]:
    """Soft (reparametrized) Gumbel-softmax sample of a two-way choice"""
    g0, g1 = sample_gumbel_pair(rng)
    return softmax_pair(a0 + g0, a1 + g1, temperature)
