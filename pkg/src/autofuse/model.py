"""
Learn-to-aggregate client model over the full double-branch topology.

Encoder = blocks 1..L-1, classifier = block L, each with a shared version and
a private copy. Features and logits of the two branches meet in the fusion
layers; a single cross-entropy on the fused logits trains everything,
the fusion parameters included.
"""
from typing import List, Optional, Sequence

import numpy as np

from src.autofuse.fusion import NOISE_FREE, FusionTrace, GumbelDraws, fuse_features, fuse_features_backward, \
    fuse_outputs, fuse_outputs_backward
from src.autofuse.params import FusionMode, FusionParams
from src.nncore.layers import ForwardCache, Layer, backprop_layers, run_layers
from src.nncore.losses import loss_softmax_ce, softmax
from src.nncore.tensor import param_count
from src.splitnet.client_model import ClientModel, LossResult
from src.splitnet.network import NetworkSplit
from src.splitnet.ways import PrivatizationWay, WayKind
from src.utils.exceptions import ConfigurationError

FULL_DOUBLE = PrivatizationWay(WayKind.SSP, 1)


def _flat(blocks) -> List[Layer]:
    return [layer for block in blocks for layer in block]


class AutoFuseModel:
    def __init__(self, split: NetworkSplit, psi: FusionParams, rng: np.random.Generator):
        if split.num_blocks < 2:
            raise ConfigurationError("automatic fusion needs an encoder and a classifier block (L >= 2)")
        base = ClientModel(split, FULL_DOUBLE, rng)
        cut = split.num_blocks - 1
        self.num_blocks = split.num_blocks
        self.encoder_s = _flat(base.shared_blocks[:cut])
        self.classifier_s = _flat(base.shared_blocks[cut:])
        self.encoder_p = _flat(base.private_blocks[:cut])
        self.classifier_p = _flat(base.private_blocks[cut:])
        self.psi = psi.copy()
        self.name = psi.mode.algorithm

    @property
    def mode(self) -> FusionMode:
        return self.psi.mode

    # ------------------------------------------------------------------
    # Partition views, same contract as ClientModel
    # ------------------------------------------------------------------
    def shared_layers(self) -> List[Layer]:
        return self.encoder_s + self.classifier_s

    def private_layers(self) -> List[Layer]:
        return self.encoder_p + self.classifier_p

    def shared_arrays(self) -> List[np.ndarray]:
        return [p for layer in self.shared_layers() for p in layer.params]

    def shared_grads(self) -> List[np.ndarray]:
        return [g for layer in self.shared_layers() for g in layer.grads]

    def private_arrays(self) -> List[np.ndarray]:
        return [p for layer in self.private_layers() for p in layer.params]

    def private_grads(self) -> List[np.ndarray]:
        return [g for layer in self.private_layers() for g in layer.grads]

    def fusion_arrays(self) -> List[np.ndarray]:
        return [self.psi.raw]

    def fusion_grads(self) -> List[np.ndarray]:
        return [self.psi.grad]

    def shared_size(self) -> int:
        return param_count(self.shared_arrays())

    def private_size(self) -> int:
        return param_count(self.private_arrays())

    def load_psi(self, psi: FusionParams) -> None:
        if psi.mode is not self.psi.mode:
            raise ConfigurationError(f"cannot load {psi.mode.algorithm} parameters into {self.name}")
        self.psi.raw[...] = psi.raw
        self.psi.temperature = psi.temperature

    def zero_grad(self) -> None:
        for layer in self.shared_layers() + self.private_layers():
            layer.zero_grad()
        self.psi.zero_grad()

    # ------------------------------------------------------------------
    # Forward / backward
    # ------------------------------------------------------------------
    def _draws(self, rng: Optional[np.random.Generator], draws: Optional[GumbelDraws]) -> GumbelDraws:
        if self.mode is not FusionMode.HS:
            return NOISE_FREE
        if draws is not None:
            return draws
        return GumbelDraws.sample(rng) if rng is not None else NOISE_FREE

    def forward(self, x: np.ndarray, cache: Optional[ForwardCache] = None, trace: Optional[FusionTrace] = None,
                rng: Optional[np.random.Generator] = None, draws: Optional[GumbelDraws] = None) -> np.ndarray:
        """Fused logits; HS samples fresh draws from rng unless draws are given"""
        draws = self._draws(rng, draws)
        h_s = run_layers(self.encoder_s, x, cache)
        h_p = run_layers(self.encoder_p, x, cache)
        hat_s, hat_p = fuse_features(h_s, h_p, self.psi, trace=trace, noise=draws.alpha)
        o_s = run_layers(self.classifier_s, hat_s, cache)
        o_p = run_layers(self.classifier_p, hat_p, cache)
        return fuse_outputs(o_s, o_p, self.psi, trace=trace, noise=draws.beta)

    def backward(self, grad_logits: np.ndarray, cache: ForwardCache, trace: FusionTrace) -> np.ndarray:
        g_os, g_op = fuse_outputs_backward(trace, self.psi, grad_logits)
        g_hat_s = backprop_layers(self.classifier_s, g_os, cache)
        g_hat_p = backprop_layers(self.classifier_p, g_op, cache)
        g_hs, g_hp = fuse_features_backward(trace, self.psi, g_hat_s, g_hat_p)
        return backprop_layers(self.encoder_s, g_hs, cache) + backprop_layers(self.encoder_p, g_hp, cache)

    def loss(self, x: np.ndarray, labels: Sequence[int], rng: Optional[np.random.Generator] = None,
             backward: bool = True, draws: Optional[GumbelDraws] = None) -> LossResult:
        cache = ForwardCache() if backward else None
        trace = FusionTrace()
        logits = self.forward(x, cache, trace, rng, draws)
        value, grad = loss_softmax_ce(logits, labels)
        if backward:
            self.backward(grad, cache, trace)
        return LossResult(total=value, branch_losses=[value])

    # ------------------------------------------------------------------
    # Prediction
    # ------------------------------------------------------------------
    def predict(self, x: np.ndarray) -> np.ndarray:
        """Personalized prediction; HS uses the noise-free weights"""
        return softmax(self.forward(x, draws=NOISE_FREE))

    def global_predict(self, x: np.ndarray) -> np.ndarray:
        """Shared route only: the shared features fill both fusion inputs"""
        h_s = run_layers(self.encoder_s, x)
        hat_s, _ = fuse_features(h_s, h_s, self.psi, noise=NOISE_FREE.alpha)
        o_s = run_layers(self.classifier_s, hat_s)
        return softmax(fuse_outputs(o_s, o_s, self.psi, noise=NOISE_FREE.beta))


def auto_forward(model: AutoFuseModel, x: np.ndarray, psi: Optional[FusionParams] = None,
                 rng: Optional[np.random.Generator] = None, draws: Optional[GumbelDraws] = None) -> np.ndarray:
    """Fused logits of a client model, after loading psi when given"""
    if psi is not None:
        model.load_psi(psi)
    return model.forward(x, rng=rng, draws=draws)
