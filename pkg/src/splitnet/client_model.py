"""
Client models built from a network split and a privatization way.

Topologies:
  PS / SP     one chain mixing shared and private blocks -> one logits tensor
  SPS(b)      shared and private trunks over blocks 1..b-1, features averaged,
              then shared blocks b..L -> one logits tensor
  SSP(b)      shared trunk over blocks 1..b-1 feeding a shared head and a
              private head over blocks b..L -> two logits tensors
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.nncore.layers import ForwardCache, Layer, backprop_layers, run_layers
from src.nncore.losses import loss_softmax_ce, softmax
from src.nncore.tensor import flatten_params, param_count, unflatten_into
from src.splitnet.network import Block, NetworkSplit
from src.splitnet.ways import DOUBLE, PRIVATE, SHARED, PrivatizationWay, WayKind, format_way
from src.utils.exceptions import ProtocolError, UnsupportedMetricError, UsageError


@dataclass
class BranchOutputs:
    """Logits per branch (shared head first) plus the cache for backward"""

    logits: List[np.ndarray]
    cache: Optional[ForwardCache] = None


@dataclass
class LossResult:
    total: float
    branch_losses: List[float] = field(default_factory=list)


def _layers_of(blocks: Sequence[Block]) -> List[Layer]:
    return [layer for block in blocks for layer in block]


class ClientModel:
    """Shared/private parameter partition of one network split under one way"""

    def __init__(self, split: NetworkSplit, way: PrivatizationWay, rng: np.random.Generator):
        self.way = way
        self.num_blocks = split.num_blocks
        self.roles = way.roles(self.num_blocks)
        self.name = format_way(way, self.num_blocks)
        self.shared_blocks: List[Optional[Block]] = []
        self.private_blocks: List[Optional[Block]] = []
        for i, role in enumerate(self.roles):
            self.shared_blocks.append(split.clone_block(i) if role in (SHARED, DOUBLE) else None)
            # private blocks are fresh: copies share architecture only
            self.private_blocks.append(split.spawn_block(i, rng) if role in (PRIVATE, DOUBLE) else None)

    # ------------------------------------------------------------------
    # Partition views
    # ------------------------------------------------------------------
    def shared_layers(self) -> List[Layer]:
        return _layers_of([b for b in self.shared_blocks if b is not None])

    def private_layers(self) -> List[Layer]:
        return _layers_of([b for b in self.private_blocks if b is not None])

    def shared_arrays(self) -> List[np.ndarray]:
        return [p for layer in self.shared_layers() for p in layer.params]

    def shared_grads(self) -> List[np.ndarray]:
        return [g for layer in self.shared_layers() for g in layer.grads]

    def private_arrays(self) -> List[np.ndarray]:
        return [p for layer in self.private_layers() for p in layer.params]

    def private_grads(self) -> List[np.ndarray]:
        return [g for layer in self.private_layers() for g in layer.grads]

    def fusion_arrays(self) -> List[np.ndarray]:
        return []

    def fusion_grads(self) -> List[np.ndarray]:
        return []

    def shared_size(self) -> int:
        return param_count(self.shared_arrays())

    def private_size(self) -> int:
        return param_count(self.private_arrays())

    def zero_grad(self) -> None:
        for layer in self.shared_layers() + self.private_layers():
            layer.zero_grad()

    @property
    def trunk_length(self) -> int:
        return self.way.b - 1

    # ------------------------------------------------------------------
    # Forward / backward
    # ------------------------------------------------------------------
    def _single_chain(self) -> List[Layer]:
        return _layers_of([s if s is not None else p for s, p in zip(self.shared_blocks, self.private_blocks)])

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None) -> BranchOutputs:
        kind, cut = self.way.kind, self.trunk_length
        if self.way.is_fully_shared or kind in (WayKind.PS, WayKind.SP):
            return BranchOutputs([run_layers(self._single_chain(), x, cache)], cache)

        if kind is WayKind.SPS:
            h_s = run_layers(_layers_of(self.shared_blocks[:cut]), x, cache)
            h_p = run_layers(_layers_of(self.private_blocks[:cut]), x, cache)
            if h_s.shape != h_p.shape:
                raise ProtocolError(f"branch features differ in shape: {h_s.shape} vs {h_p.shape}")
            h = 0.5 * (h_s + h_p)
            return BranchOutputs([run_layers(_layers_of(self.shared_blocks[cut:]), h, cache)], cache)

        trunk = run_layers(_layers_of(self.shared_blocks[:cut]), x, cache)
        o_s = run_layers(_layers_of(self.shared_blocks[cut:]), trunk, cache)
        o_p = run_layers(_layers_of(self.private_blocks[cut:]), trunk, cache)
        if o_s.shape != o_p.shape:
            raise ProtocolError(f"head outputs differ in shape: {o_s.shape} vs {o_p.shape}")
        return BranchOutputs([o_s, o_p], cache)

    def backward(self, grad_logits: Sequence[np.ndarray], cache: ForwardCache) -> np.ndarray:
        """Accumulate parameter grads; returns grad w.r.t. the input"""
        kind, cut = self.way.kind, self.trunk_length
        if len(grad_logits) != (2 if self.way.two_heads else 1):
            raise UsageError(f"{self.name} expects {2 if self.way.two_heads else 1} logit grads")
        if self.way.is_fully_shared or kind in (WayKind.PS, WayKind.SP):
            return backprop_layers(self._single_chain(), grad_logits[0], cache)

        if kind is WayKind.SPS:
            g_h = backprop_layers(_layers_of(self.shared_blocks[cut:]), grad_logits[0], cache)
            g_x = backprop_layers(_layers_of(self.shared_blocks[:cut]), 0.5 * g_h, cache)
            return g_x + backprop_layers(_layers_of(self.private_blocks[:cut]), 0.5 * g_h, cache)

        g_trunk = backprop_layers(_layers_of(self.shared_blocks[cut:]), grad_logits[0], cache)
        g_trunk = g_trunk + backprop_layers(_layers_of(self.private_blocks[cut:]), grad_logits[1], cache)
        return backprop_layers(_layers_of(self.shared_blocks[:cut]), g_trunk, cache)

    def loss(self, x: np.ndarray, labels: Sequence[int], rng: Optional[np.random.Generator] = None,
             backward: bool = True) -> "LossResult":
        """Training loss; rng is unused, manual ways draw no noise"""
        return local_loss(self, x, labels, backward)

    # ------------------------------------------------------------------
    # Prediction
    # ------------------------------------------------------------------
    def predict(self, x: np.ndarray) -> np.ndarray:
        """Softmax probabilities; two-head ways average the two softmaxes"""
        outputs = self.forward(x).logits
        probs = [softmax(o) for o in outputs]
        if len(probs) == 1:
            return probs[0]
        return 0.5 * (probs[0] + probs[1])

    def global_predict(self, x: np.ndarray) -> np.ndarray:
        """Prediction of the complete shared model alone"""
        if not self.way.has_global_model:
            raise UnsupportedMetricError(f"way '{self.name}' has no complete global model")
        return softmax(run_layers(_layers_of(self.shared_blocks), x))


def build_client_model(split: NetworkSplit, way: PrivatizationWay, rng: np.random.Generator) -> ClientModel:
    return ClientModel(split, way, rng)


def forward_way(model: ClientModel, x: np.ndarray, cache: Optional[ForwardCache] = None) -> BranchOutputs:
    return model.forward(x, cache)


def local_loss(model: ClientModel, x: np.ndarray, labels: Sequence[int], backward: bool = True) -> LossResult:
    """Sum of per-branch cross-entropies; optionally backpropagated in one pass"""
    cache = ForwardCache() if backward else None
    outputs = model.forward(x, cache)
    losses, grads = [], []
    for logits in outputs.logits:
        loss, grad = loss_softmax_ce(logits, labels)
        losses.append(loss)
        grads.append(grad)
    if backward:
        model.backward(grads, cache)
    return LossResult(total=float(sum(losses)), branch_losses=losses)


def predict(model: ClientModel, x: np.ndarray) -> np.ndarray:
    return model.predict(x)


def shared_params(model) -> np.ndarray:
    """Flat copy of every shared parameter, block order then layer order"""
    return flatten_params(model.shared_arrays()).copy()


def load_shared(model, vector: np.ndarray) -> None:
    arrays = model.shared_arrays()
    expected = param_count(arrays)
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or vector.size != expected:
        raise ProtocolError(f"shared vector has {vector.size} values, model expects {expected}")
    unflatten_into(vector, arrays)


def private_params(model) -> np.ndarray:
    return flatten_params(model.private_arrays()).copy()
