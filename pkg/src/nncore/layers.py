"""
Layer forward/backward for the small networks the simulator trains.

Layers hold their parameters and accumulated gradients. Anything backward
needs is stored in a ForwardCache keyed by layer identity, so a cache can
serve a whole multi-branch forward pass.
"""
import copy
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.nncore.tensor import DTYPE, check_finite, expect_rank, uniform_fan_in
from src.utils.exceptions import ConfigurationError, UsageError


class ForwardCache:
    """Per-forward-pass storage for backward inputs"""

    def __init__(self):
        self._entries: Dict[int, Tuple[Any, Tuple[int, ...]]] = {}

    def put(self, layer: "Layer", value: Any, out_shape: Tuple[int, ...]) -> None:
        key = id(layer)
        if key in self._entries:
            raise UsageError(f"{layer.kind} layer already cached in this pass; use a fresh ForwardCache")
        self._entries[key] = (value, out_shape)

    def take(self, layer: "Layer", grad_shape: Tuple[int, ...]) -> Any:
        key = id(layer)
        if key not in self._entries:
            raise UsageError(f"no cached forward for {layer.kind} layer")
        value, out_shape = self._entries.pop(key)
        if tuple(grad_shape) != tuple(out_shape):
            raise UsageError(
                f"{layer.kind} backward got grad of shape {tuple(grad_shape)}, forward produced {tuple(out_shape)}"
            )
        return value

    def __len__(self) -> int:
        return len(self._entries)


class Layer:
    """Base layer; parameter-free kinds keep empty params/grads"""

    kind: str = "Layer"

    def __init__(self):
        self.params: List[np.ndarray] = []
        self.grads: List[np.ndarray] = []

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray, cache: ForwardCache) -> np.ndarray:
        raise NotImplementedError

    def zero_grad(self) -> None:
        for g in self.grads:
            g.fill(0.0)

    def reinitialize(self, rng: np.random.Generator) -> None:
        """Draw fresh parameters; no-op for parameter-free kinds"""

    def spawn(self, rng: np.random.Generator) -> "Layer":
        """Same architecture, independently initialized parameters"""
        twin = copy.deepcopy(self)
        twin.reinitialize(rng)
        twin.zero_grad()
        return twin

    def clone(self) -> "Layer":
        """Same architecture and parameter values"""
        return copy.deepcopy(self)

    def describe(self) -> str:
        return self.kind


class Linear(Layer):
    """y = x W^T + b, W of shape [out, in]"""

    kind = "Linear"

    def __init__(self, in_features: int, out_features: int, rng: Optional[np.random.Generator] = None):
        super().__init__()
        if in_features < 1 or out_features < 1:
            raise ConfigurationError(f"Linear({in_features},{out_features}) needs positive sizes")
        self.in_features = in_features
        self.out_features = out_features
        self.params = [np.zeros((out_features, in_features), dtype=DTYPE), np.zeros(out_features, dtype=DTYPE)]
        self.grads = [np.zeros_like(p) for p in self.params]
        if rng is not None:
            self.reinitialize(rng)

    def reinitialize(self, rng: np.random.Generator) -> None:
        self.params[0][...] = uniform_fan_in(rng, self.params[0].shape, self.in_features)
        self.params[1].fill(0.0)

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
        expect_rank(x, 2, self.describe())
        if x.shape[1] != self.in_features:
            raise ConfigurationError(f"{self.describe()} got {x.shape[1]} input features")
        weight, bias = self.params
        out = check_finite(x @ weight.T + bias, self.describe())
        if cache is not None:
            cache.put(self, x, out.shape)
        return out

    def backward(self, grad_out: np.ndarray, cache: ForwardCache) -> np.ndarray:
        x = cache.take(self, grad_out.shape)
        weight = self.params[0]
        self.grads[0] += grad_out.T @ x
        self.grads[1] += grad_out.sum(axis=0)
        return grad_out @ weight

    def describe(self) -> str:
        return f"Linear({self.in_features},{self.out_features})"


class Conv2D(Layer):
    """'valid' padding, stride 1; weight [cout, cin, k, k]"""

    kind = "Conv2D"

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: Optional[np.random.Generator] = None):
        super().__init__()
        if kernel_size < 1:
            raise ConfigurationError(f"Conv2D kernel size must be >= 1, got {kernel_size}")
        if in_channels < 1 or out_channels < 1:
            raise ConfigurationError("Conv2D needs positive channel counts")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        k = kernel_size
        self.params = [np.zeros((out_channels, in_channels, k, k), dtype=DTYPE), np.zeros(out_channels, dtype=DTYPE)]
        self.grads = [np.zeros_like(p) for p in self.params]
        if rng is not None:
            self.reinitialize(rng)

    def reinitialize(self, rng: np.random.Generator) -> None:
        fan_in = self.in_channels * self.kernel_size * self.kernel_size
        self.params[0][...] = uniform_fan_in(rng, self.params[0].shape, fan_in)
        self.params[1].fill(0.0)

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
        expect_rank(x, 4, self.describe())
        k = self.kernel_size
        if x.shape[1] != self.in_channels or x.shape[2] < k or x.shape[3] < k:
            raise ConfigurationError(f"{self.describe()} cannot take input of shape {x.shape}")
        weight, bias = self.params
        windows = sliding_window_view(x, (k, k), axis=(2, 3))  # [B, cin, Ho, Wo, k, k]
        out = np.einsum("bchwij,ocij->bohw", windows, weight) + bias[None, :, None, None]
        out = check_finite(out, self.describe())
        if cache is not None:
            cache.put(self, x, out.shape)
        return out

    def backward(self, grad_out: np.ndarray, cache: ForwardCache) -> np.ndarray:
        x = cache.take(self, grad_out.shape)
        k = self.kernel_size
        weight = self.params[0]
        windows = sliding_window_view(x, (k, k), axis=(2, 3))
        self.grads[0] += np.einsum("bchwij,bohw->ocij", windows, grad_out)
        self.grads[1] += grad_out.sum(axis=(0, 2, 3))
        # input grad is the full correlation of grad_out with the flipped kernel
        padded = np.pad(grad_out, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
        g_windows = sliding_window_view(padded, (k, k), axis=(2, 3))
        return np.einsum("bohwij,ocij->bchw", g_windows, weight[:, :, ::-1, ::-1])

    def describe(self) -> str:
        return f"Conv2D({self.in_channels},{self.out_channels},{self.kernel_size})"


class ReLU(Layer):
    kind = "ReLU"

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
        mask = x > 0
        out = np.where(mask, x, 0.0)
        if cache is not None:
            cache.put(self, mask, out.shape)
        return out

    def backward(self, grad_out: np.ndarray, cache: ForwardCache) -> np.ndarray:
        mask = cache.take(self, grad_out.shape)
        return np.where(mask, grad_out, 0.0)


class MaxPool2(Layer):
    """Kernel 2, stride 2; odd trailing rows/columns are dropped"""

    kind = "MaxPool2"

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
        expect_rank(x, 4, self.kind)
        b, c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        if h2 == 0 or w2 == 0:
            raise ConfigurationError(f"MaxPool2 cannot pool spatial size {h}x{w}")
        blocks = x[:, :, :h2 * 2, :w2 * 2].reshape(b, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5)
        blocks = blocks.reshape(b, c, h2, w2, 4)
        winner = blocks.argmax(axis=-1)
        out = np.take_along_axis(blocks, winner[..., None], axis=-1)[..., 0]
        if cache is not None:
            cache.put(self, (winner, x.shape), out.shape)
        return out

    def backward(self, grad_out: np.ndarray, cache: ForwardCache) -> np.ndarray:
        winner, in_shape = cache.take(self, grad_out.shape)
        b, c, h, w = in_shape
        h2, w2 = h // 2, w // 2
        routed = np.zeros((b, c, h2, w2, 4), dtype=DTYPE)
        np.put_along_axis(routed, winner[..., None], grad_out[..., None], axis=-1)
        routed = routed.reshape(b, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h2 * 2, w2 * 2)
        grad_in = np.zeros(in_shape, dtype=DTYPE)
        grad_in[:, :, :h2 * 2, :w2 * 2] = routed
        return grad_in


class Flatten(Layer):
    kind = "Flatten"

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
        out = x.reshape(x.shape[0], -1)
        if cache is not None:
            cache.put(self, x.shape, out.shape)
        return out

    def backward(self, grad_out: np.ndarray, cache: ForwardCache) -> np.ndarray:
        in_shape = cache.take(self, grad_out.shape)
        return grad_out.reshape(in_shape)


def layer_forward(layer: Layer, x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
    return layer.forward(x, cache)


def layer_backward(layer: Layer, grad_out: np.ndarray, cache: ForwardCache) -> np.ndarray:
    return layer.backward(grad_out, cache)


def run_layers(layers: List[Layer], x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
    for layer in layers:
        x = layer.forward(x, cache)
    return x


def backprop_layers(layers: List[Layer], grad: np.ndarray, cache: ForwardCache) -> np.ndarray:
    for layer in reversed(layers):
        grad = layer.backward(grad, cache)
    return grad
