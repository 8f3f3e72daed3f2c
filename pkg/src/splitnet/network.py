"""
Network splits: a network cut into sequentially adjacent blocks
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.nncore.layers import Conv2D, Flatten, ForwardCache, Layer, Linear, MaxPool2, ReLU, run_layers
from src.nncore.tensor import param_count
from src.splitnet.ways import MAX_BLOCKS
from src.utils.exceptions import ConfigurationError

Block = List[Layer]


@dataclass
class NetworkSplit:
    """Ordered blocks whose concatenation is the full network"""

    blocks: List[Block]

    def __post_init__(self):
        if not 1 <= len(self.blocks) <= MAX_BLOCKS:
            raise ConfigurationError(f"a split needs 1..{MAX_BLOCKS} blocks, got {len(self.blocks)}")
        for i, block in enumerate(self.blocks):
            if not block:
                raise ConfigurationError(f"block {i + 1} is empty")

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def layers(self) -> List[Layer]:
        return [layer for block in self.blocks for layer in block]

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None) -> np.ndarray:
        """Plain sequential forward of the unsplit network"""
        return run_layers(self.layers, x, cache)

    def block_size(self, index: int) -> int:
        return param_count([p for layer in self.blocks[index] for p in layer.params])

    def param_total(self) -> int:
        return sum(self.block_size(i) for i in range(self.num_blocks))

    def clone_block(self, index: int) -> Block:
        return [layer.clone() for layer in self.blocks[index]]

    def spawn_block(self, index: int, rng: np.random.Generator) -> Block:
        return [layer.spawn(rng) for layer in self.blocks[index]]

    def describe(self) -> str:
        names = []
        for i, block in enumerate(self.blocks):
            names.append(f"{chr(ord('A') + i)}=[{', '.join(layer.describe() for layer in block)}]")
        return " ".join(names)


def split_layers(layers: Sequence[Layer], boundaries: Optional[Sequence[int]] = None) -> NetworkSplit:
    """Cut layers into blocks.

    boundaries are the layer indices where blocks 2..L start. When omitted,
    each parametric layer after the first opens a new block and
    parameter-free layers stay with the block before them.
    """
    layers = list(layers)
    if not layers:
        raise ConfigurationError("cannot split an empty network")
    if boundaries is None:
        starts = [i for i, layer in enumerate(layers) if layer.params][1:]
    else:
        starts = sorted(int(b) for b in boundaries)
        if len(set(starts)) != len(starts) or any(not 0 < s < len(layers) for s in starts):
            raise ConfigurationError(f"block boundaries {list(boundaries)} must be distinct and inside (0, {len(layers)})")
    edges = [0, *starts, len(layers)]
    return NetworkSplit([layers[a:b] for a, b in zip(edges[:-1], edges[1:])])


def coarse_boundaries(layers: Sequence[Layer]) -> List[int]:
    """Encoder/classifier split (L=2).

    Convolutional networks: the fully-connected layers are the classifier.
    Pure MLPs: the last Linear layer is the classifier.
    """
    parametric = [i for i, layer in enumerate(layers) if layer.params]
    if len(parametric) < 2:
        raise ConfigurationError("an encoder/classifier split needs at least two parametric layers")
    if any(isinstance(layers[i], Conv2D) for i in parametric):
        first_fc = next(i for i in parametric if isinstance(layers[i], Linear))
        return [first_fc]
    return [parametric[-1]]


def build_mlp_layers(d_in: int, hidden: Sequence[int], num_classes: int, rng: np.random.Generator) -> List[Layer]:
    layers: List[Layer] = []
    width = d_in
    for h in hidden:
        layers += [Linear(width, h, rng), ReLU()]
        width = h
    layers.append(Linear(width, num_classes, rng))
    return layers


def build_cnn_layers(in_channels: int, height: int, width: int, conv_channels: Sequence[int],
                     kernel_size: int, hidden: Sequence[int], num_classes: int,
                     rng: np.random.Generator) -> List[Layer]:
    """Conv -> ReLU -> MaxPool stages, then a fully-connected classifier"""
    layers: List[Layer] = []
    channels, h, w = in_channels, height, width
    for cout in conv_channels:
        layers += [Conv2D(channels, cout, kernel_size, rng), ReLU()]
        h, w = h - kernel_size + 1, w - kernel_size + 1
        if h >= 2 and w >= 2:
            layers.append(MaxPool2())
            h, w = h // 2, w // 2
        if h < 1 or w < 1:
            raise ConfigurationError(f"input {height}x{width} too small for {len(conv_channels)} conv stages")
        channels = cout
    layers.append(Flatten())
    layers += build_mlp_layers(channels * h * w, hidden, num_classes, rng)
    return layers


def build_mlp_split(d_in: int, hidden: Sequence[int], num_classes: int, rng: np.random.Generator,
                    coarse: bool = False, boundaries: Optional[Sequence[int]] = None) -> NetworkSplit:
    """MLP cut per parametric layer, or encoder/classifier when coarse"""
    layers = build_mlp_layers(d_in, hidden, num_classes, rng)
    if coarse and boundaries is None:
        boundaries = coarse_boundaries(layers)
    return split_layers(layers, boundaries)


def build_cnn_split(in_channels: int, height: int, width: int, conv_channels: Sequence[int], kernel_size: int,
                    hidden: Sequence[int], num_classes: int, rng: np.random.Generator, coarse: bool = False,
                    boundaries: Optional[Sequence[int]] = None) -> NetworkSplit:
    layers = build_cnn_layers(in_channels, height, width, conv_channels, kernel_size, hidden, num_classes, rng)
    if coarse and boundaries is None:
        boundaries = coarse_boundaries(layers)
    return split_layers(layers, boundaries)
