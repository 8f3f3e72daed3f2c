"""Minimal differentiable network core"""
from src.nncore.layers import Conv2D, Flatten, ForwardCache, Layer, Linear, MaxPool2, ReLU, layer_backward, layer_forward
from src.nncore.losses import loss_softmax_ce, softmax
from src.nncore.optim import SgdMomentum, sgd_momentum_step
from src.nncore.softmax import gumbel_softmax_pair, softmax_pair

__all__ = [
    "Conv2D", "Flatten", "ForwardCache", "Layer", "Linear", "MaxPool2", "ReLU",
    "layer_backward", "layer_forward", "loss_softmax_ce", "softmax",
    "SgdMomentum", "sgd_momentum_step", "gumbel_softmax_pair", "softmax_pair",
]
