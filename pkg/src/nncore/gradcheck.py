"""
Central finite-difference oracle for analytic gradients
"""
from typing import Callable, List, Tuple

import numpy as np

from src.nncore.layers import Conv2D, Flatten, ForwardCache, Layer, Linear, MaxPool2, ReLU
from src.nncore.losses import loss_softmax_ce

FD_EPSILON = 1e-5
GRAD_TOLERANCE = 1e-4


def numeric_grad(loss_fn: Callable[[], float], target: np.ndarray, eps: float = FD_EPSILON) -> np.ndarray:
    """Perturb target in place element by element; loss_fn re-reads it"""
    grad = np.zeros_like(target)
    flat = target.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        plus = loss_fn()
        flat[i] = saved - eps
        minus = loss_fn()
        flat[i] = saved
        out[i] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max|a - n| / max(max|a|, max|n|), floored to avoid 0/0"""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-8)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def check_layer(layer: Layer, x: np.ndarray, rng: np.random.Generator) -> float:
    """Worst relative error over input and parameter grads of sum(out * R)"""
    direction = rng.normal(size=layer.forward(x).shape)

    def loss() -> float:
        return float((layer.forward(x) * direction).sum())

    layer.zero_grad()
    cache = ForwardCache()
    layer.forward(x, cache)
    grad_x = layer.backward(direction, cache)
    errors = [relative_error(grad_x, numeric_grad(loss, x))]
    for param, grad in zip(layer.params, layer.grads):
        errors.append(relative_error(grad, numeric_grad(loss, param)))
    return max(errors)


def check_loss(rng: np.random.Generator, batch: int = 4, num_classes: int = 3) -> float:
    logits = rng.normal(scale=2.0, size=(batch, num_classes))
    labels = rng.integers(0, num_classes, size=batch)
    _, grad = loss_softmax_ce(logits, labels)
    numeric = numeric_grad(lambda: loss_softmax_ce(logits, labels)[0], logits)
    return relative_error(grad, numeric)


def layer_cases(rng: np.random.Generator) -> List[Tuple[str, Layer, np.ndarray]]:
    """One randomly sized instance of every layer kind with a matching input"""
    b = int(rng.integers(1, 4))
    d_in, d_out = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    cin, cout, k = int(rng.integers(1, 3)), int(rng.integers(1, 3)), int(rng.integers(1, 4))
    h = k + int(rng.integers(0, 3))
    return [
        ("Linear", Linear(d_in, d_out, rng), rng.normal(size=(b, d_in))),
        ("Conv2D", Conv2D(cin, cout, k, rng), rng.normal(size=(b, cin, h, h + 1))),
        ("ReLU", ReLU(), rng.normal(size=(b, d_in + 2))),
        ("MaxPool2", MaxPool2(), rng.normal(size=(b, cin, 4, 5))),
        ("Flatten", Flatten(), rng.normal(size=(b, cin, 2, 3))),
    ]
