"""
SGD with classic (heavy-ball) momentum
"""
from typing import List, Optional, Sequence

import numpy as np

from src.utils.exceptions import ConfigurationError, ProtocolError


class SgdMomentum:
    """v <- m*v + g ; p <- p - lr*v, applied in place"""

    def __init__(self, lr: float, momentum: float = 0.9):
        if not lr > 0:
            raise ConfigurationError(f"learning rate must be positive, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {momentum}")
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.velocity: Optional[List[np.ndarray]] = None

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        if len(params) != len(grads):
            raise ProtocolError(f"{len(params)} params but {len(grads)} grads")
        if self.velocity is None:
            self.velocity = [np.zeros_like(p) for p in params]
        if len(self.velocity) != len(params):
            raise ProtocolError("optimizer velocity does not mirror the parameter list")
        for p, g, v in zip(params, grads, self.velocity):
            if p.shape != g.shape or p.shape != v.shape:
                raise ProtocolError(f"shape mismatch: param {p.shape}, grad {g.shape}, velocity {v.shape}")
            v *= self.momentum
            v += g
            p -= self.lr * v

    def reset(self) -> None:
        self.velocity = None


def sgd_momentum_step(opt: SgdMomentum, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]):
    opt.step(params, grads)
    return params
