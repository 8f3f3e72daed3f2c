"""
Fusion parameters ψ for the learn-to-aggregate algorithms
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.nncore.softmax import softmax_pair
from src.utils.exceptions import ConfigurationError, ProtocolError

DEFAULT_TEMPERATURE = 2.0


class FusionMode(str, Enum):
    CS = "CS"  # cross-stitch
    SA = "SA"  # soft attention
    HS = "HS"  # hard selection

    @property
    def algorithm(self) -> str:
        return f"Auto{self.value}"


AUTO_WAYS = {mode.algorithm: mode for mode in FusionMode}

PARAM_NAMES: Dict[FusionMode, Tuple[str, ...]] = {
    FusionMode.CS: ("alpha00", "alpha01", "alpha10", "alpha11", "beta0", "beta1"),
    FusionMode.SA: ("alpha0", "alpha1", "beta0", "beta1"),
    FusionMode.HS: ("alpha0", "alpha1", "beta0", "beta1"),
}

# raw pairs that share one softmax
PAIRS: Dict[FusionMode, Tuple[Tuple[str, str], ...]] = {
    FusionMode.CS: (("alpha00", "alpha01"), ("alpha10", "alpha11"), ("beta0", "beta1")),
    FusionMode.SA: (("alpha0", "alpha1"), ("beta0", "beta1")),
    FusionMode.HS: (("alpha0", "alpha1"), ("beta0", "beta1")),
}


def parse_auto_way(name: str) -> FusionMode:
    if name not in AUTO_WAYS:
        raise ConfigurationError(f"unknown automatic way '{name}', expected one of {sorted(AUTO_WAYS)}")
    return AUTO_WAYS[name]


@dataclass
class FusionParams:
    """Raw (pre-softmax) fusion scalars with mirrored gradients"""

    mode: FusionMode
    raw: np.ndarray
    temperature: float = DEFAULT_TEMPERATURE
    grad: np.ndarray = field(default=None)

    def __post_init__(self):
        self.mode = FusionMode(self.mode)
        self.raw = np.asarray(self.raw, dtype=np.float64).copy()
        if self.raw.shape != (len(PARAM_NAMES[self.mode]),):
            raise ConfigurationError(f"{self.mode.algorithm} needs {len(PARAM_NAMES[self.mode])} raw scalars")
        if not self.temperature > 0:
            raise ConfigurationError(f"temperature must be positive, got {self.temperature}")
        if self.grad is None:
            self.grad = np.zeros_like(self.raw)

    @classmethod
    def zeros(cls, mode: FusionMode, temperature: float = DEFAULT_TEMPERATURE) -> "FusionParams":
        """Symmetric start: every effective weight 0.5"""
        mode = FusionMode(mode)
        return cls(mode, np.zeros(len(PARAM_NAMES[mode])), temperature)

    @property
    def names(self) -> Tuple[str, ...]:
        return PARAM_NAMES[self.mode]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __getitem__(self, name: str) -> float:
        return float(self.raw[self.index(name)])

    def add_grad(self, name: str, value: float) -> None:
        self.grad[self.index(name)] += value

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def copy(self) -> "FusionParams":
        return FusionParams(self.mode, self.raw.copy(), self.temperature)

    def effective(self) -> Dict[str, float]:
        """Noise-free softmax weight for every raw scalar"""
        weights = {}
        for first, second in PAIRS[self.mode]:
            w0, w1 = softmax_pair(self[first], self[second], self.temperature)
            weights[first], weights[second] = w0, w1
        return weights

    def trace_rows(self, round_index: int) -> List[dict]:
        effective = self.effective()
        return [
            {"round": round_index, "mode": self.mode.value, "name": name,
             "raw": float(self.raw[i]), "effective": effective[name]}
            for i, name in enumerate(self.names)
        ]


def psi_aggregate(updates: Sequence[FusionParams]) -> FusionParams:
    """Elementwise mean of raw scalars, summed in the given (ascending client) order"""
    if not updates:
        raise ProtocolError("no fusion parameters to aggregate")
    mode, temperature = updates[0].mode, updates[0].temperature
    total = np.zeros_like(updates[0].raw)
    for psi in updates:
        if psi.mode is not mode:
            raise ProtocolError(f"fusion mode mismatch: {psi.mode.value} vs {mode.value}")
        total += psi.raw
    return FusionParams(mode, total / len(updates), temperature)
