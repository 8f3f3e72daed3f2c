"""
Federated training hyperparameters
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


def normalize_lrs(lrs: List[float]) -> List[float]:
    """Positive, duplicate-free, kept in ascending order"""
    if any(not lr > 0 for lr in lrs):
        raise ValueError("every learning rate must be positive")
    if len(set(lrs)) != len(lrs):
        raise ValueError("learning rates must be distinct")
    return sorted(float(lr) for lr in lrs)


class FedConfig(BaseModel):
    """Round, selection and local-SGD settings shared by every client"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rounds: int = Field(default=200, ge=0, description="Global rounds T")
    select_ratio: float = Field(default=1.0, gt=0.0, le=1.0, description="Client selection ratio Q")
    local_epochs: int = Field(default=2, ge=0, description="Local epochs E")
    batch_size: int = Field(default=64, ge=1, description="Minibatch size B")
    lrs: List[float] = Field(default_factory=lambda: [0.01, 0.03, 0.05], min_length=1,
                             description="Learning-rate grid")
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0, description="Heavy-ball momentum")
    max_local_steps: Optional[int] = Field(default=None, ge=1, description="Cap on local batches per round")
    record_every: int = Field(default=10, ge=1, description="Evaluate every N rounds")
    seed: int = Field(default=0, ge=0, lt=2 ** 63, description="Root seed")

    @field_validator("lrs")
    @classmethod
    def validate_lrs(cls, v):
        return normalize_lrs(v)

    def num_selected(self, num_clients: int) -> int:
        return max(int(self.select_ratio * num_clients + 0.5), 1)

    def record_rounds(self) -> List[int]:
        return [0] + [t for t in range(1, self.rounds + 1) if t % self.record_every == 0]
