"""
Server side of a round: client sampling and shared-parameter aggregation
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.autofuse.params import FusionParams
from src.fedsim.metrics import MetricsRecord
from src.utils.exceptions import ConfigurationError, ProtocolError


@dataclass
class ServerState:
    theta: np.ndarray
    psi: Optional[FusionParams] = None
    round: int = 0
    log: List[MetricsRecord] = field(default_factory=list)

    def record(self, record: MetricsRecord) -> None:
        if self.log and record.round <= self.log[-1].round:
            raise ProtocolError(f"metrics for round {record.round} after round {self.log[-1].round}")
        self.log.append(record)


def sample_clients(num_clients: int, ratio: float, rng: np.random.Generator) -> List[int]:
    """max(round(Q*K), 1) distinct client ids, ascending"""
    if num_clients < 1:
        raise ConfigurationError(f"need at least one client, got {num_clients}")
    if not 0.0 < ratio <= 1.0:
        raise ConfigurationError(f"selection ratio must lie in (0, 1], got {ratio}")
    count = max(int(ratio * num_clients + 0.5), 1)
    chosen = rng.choice(num_clients, size=count, replace=False)
    return sorted(int(k) for k in chosen)


def aggregate(updates: Sequence[np.ndarray]) -> np.ndarray:
    """Uniform mean, summed in the order given (ascending client id)"""
    if not updates:
        raise ProtocolError("no updates to aggregate")
    size = updates[0].shape
    total = np.zeros(size, dtype=np.float64)
    for update in updates:
        if update.shape != size:
            raise ProtocolError(f"update of shape {update.shape}, expected {size}")
        total += update
    return total / len(updates)
