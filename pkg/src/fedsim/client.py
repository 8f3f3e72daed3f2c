"""
Client state and the local training procedure
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from src.autofuse.model import AutoFuseModel
from src.autofuse.params import FusionParams
from src.fedsim.config import FedConfig
from src.nncore.optim import SgdMomentum
from src.splitnet.client_model import ClientModel, load_shared, shared_params
from src.utils.helpers import batched

logger = logging.getLogger(__name__)

Model = Union[ClientModel, AutoFuseModel]


@dataclass
class LocalStats:
    client_id: int
    steps: int = 0
    mean_loss: float = float("nan")
    skipped: bool = False


@dataclass
class LocalUpdate:
    """Everything a client transmits after a round: shared blocks and psi only"""

    client_id: int
    shared: np.ndarray
    psi: Optional[FusionParams]
    stats: LocalStats


class Client:
    """Long-lived client: model (private blocks persist), local data, private optimizer"""

    def __init__(self, client_id: int, model: Model, train_x: np.ndarray, train_y: np.ndarray,
                 test_x: np.ndarray, test_y: np.ndarray, lr: float, momentum: float):
        self.client_id = int(client_id)
        self.model = model
        self.train_x, self.train_y = train_x, train_y
        self.test_x, self.test_y = test_x, test_y
        # private velocity survives across rounds with the private blocks
        self.private_opt = SgdMomentum(lr, momentum)

    @property
    def num_train(self) -> int:
        return int(self.train_y.shape[0])

    @property
    def num_test(self) -> int:
        return int(self.test_y.shape[0])

    def download(self, theta: np.ndarray, psi: Optional[FusionParams] = None) -> None:
        load_shared(self.model, theta)
        if psi is not None:
            self.model.load_psi(psi)


def _upload(client: Client, stats: LocalStats) -> LocalUpdate:
    model = client.model
    psi = model.psi.copy() if isinstance(model, AutoFuseModel) else None
    return LocalUpdate(client.client_id, shared_params(model), psi, stats)


def local_procedure(client: Client, theta: np.ndarray, psi: Optional[FusionParams], cfg: FedConfig,
                    lr: float, rng: np.random.Generator) -> LocalUpdate:
    """Download, run E epochs of minibatch SGD, upload the shared part"""
    client.download(theta, psi)
    stats = LocalStats(client.client_id)
    if client.num_train == 0:
        logger.warning(f"⚠️ client {client.client_id} has no training samples; skipped")
        stats.skipped = True
        return _upload(client, stats)

    model = client.model
    shared = model.shared_arrays() + model.fusion_arrays()
    shared_grads = model.shared_grads() + model.fusion_grads()
    private, private_grads = model.private_arrays(), model.private_grads()
    # fresh download, fresh velocity for the shared side
    shared_opt = SgdMomentum(lr, cfg.momentum)

    losses: List[float] = []
    for _ in range(cfg.local_epochs):
        order = rng.permutation(client.num_train)
        for batch in batched(order, cfg.batch_size):
            if cfg.max_local_steps is not None and stats.steps >= cfg.max_local_steps:
                break
            model.zero_grad()
            result = model.loss(client.train_x[batch], client.train_y[batch], rng=rng)
            if shared:
                shared_opt.step(shared, shared_grads)
            if private:
                client.private_opt.step(private, private_grads)
            losses.append(result.total)
            stats.steps += 1

    if losses:
        stats.mean_loss = float(np.mean(losses))
    logger.debug(f"client {client.client_id}: {stats.steps} steps, mean loss {stats.mean_loss:.4f}")
    return _upload(client, stats)
