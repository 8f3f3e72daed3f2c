"""
Aggregation / personalization accuracy and best-configuration selection
"""
import logging
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.splitnet.client_model import load_shared
from src.utils.exceptions import ConfigurationError, DataError, ScoringError, UnsupportedMetricError
from src.utils.helpers import batched, last_mean

logger = logging.getLogger(__name__)

SCORE_WINDOW = 5
METRICS = ("local", "global")


class MetricsRecord(BaseModel):
    """One evaluation point of a run"""

    model_config = ConfigDict(extra="forbid")

    round: int = Field(..., ge=0, description="Global round t")
    global_acc: Optional[float] = Field(default=None, ge=0.0, le=1.0, description="Aggregation accuracy Ag")
    local_acc: Optional[float] = Field(default=None, ge=0.0, le=1.0, description="Mean personalization accuracy Ap")
    per_client: Dict[int, float] = Field(default_factory=dict, description="Ap per evaluated client")
    elapsed: float = Field(default=0.0, ge=0.0, description="Seconds since the run started")

    def value(self, metric: str) -> Optional[float]:
        return self.local_acc if metric == "local" else self.global_acc


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(probs, axis=1) == labels))


def predict_in_chunks(predict_fn, features: np.ndarray, batch_size: int) -> np.ndarray:
    parts = [predict_fn(features[idx]) for idx in batched(np.arange(features.shape[0]), batch_size)]
    return np.concatenate(parts, axis=0)


def eval_global(theta: np.ndarray, features: np.ndarray, labels: np.ndarray, reference,
                psi=None, batch_size: int = 512) -> float:
    """Ag: accuracy of the aggregated shared model on the global test set"""
    way = getattr(reference, "way", None)
    if way is not None and not way.has_global_model:
        raise UnsupportedMetricError(f"way '{reference.name}' has no complete global model")
    if labels.shape[0] == 0:
        raise DataError("global test set is empty")
    load_shared(reference, theta)
    if psi is not None:
        reference.load_psi(psi)
    probs = predict_in_chunks(reference.global_predict, features, batch_size)
    return accuracy(probs, labels)


def eval_personalized(clients: Sequence, batch_size: int = 512) -> Tuple[Optional[float], Dict[int, float]]:
    """Ap: unweighted mean of local-test accuracies; clients without a test set are excluded"""
    per_client: Dict[int, float] = {}
    for client in clients:
        if client.num_test == 0:
            logger.warning(f"⚠️ client {client.client_id} has no local test samples; excluded from Ap")
            continue
        probs = predict_in_chunks(client.model.predict, client.test_x, batch_size)
        per_client[client.client_id] = accuracy(probs, client.test_y)
    if not per_client:
        return None, per_client
    return float(np.mean(list(per_client.values()))), per_client


def window_score(log: Sequence[MetricsRecord], metric: str = "local") -> float:
    """Mean of the last five recorded values of one metric"""
    if metric not in METRICS:
        raise ConfigurationError(f"unknown metric '{metric}', expected one of {METRICS}")
    if len(log) < SCORE_WINDOW:
        raise ScoringError(f"need at least {SCORE_WINDOW} records to score, got {len(log)}")
    values = [record.value(metric) for record in log[-SCORE_WINDOW:]]
    if any(v is None for v in values):
        raise UnsupportedMetricError(f"'{metric}' accuracy missing from the last {SCORE_WINDOW} records")
    return last_mean(values, SCORE_WINDOW)


def select_best(logs: Mapping[float, Sequence[MetricsRecord]], metric: str = "local") -> Tuple[float, float]:
    """Best learning rate by window score; ties go to the smaller rate"""
    if not logs:
        raise ScoringError("no runs to choose from")
    best_lr, best_score = None, None
    for lr in sorted(logs):
        score = window_score(logs[lr], metric)
        if best_score is None or score > best_score:
            best_lr, best_score = lr, score
    return best_lr, best_score
