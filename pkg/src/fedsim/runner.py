"""
Experiment runner: T rounds of sample -> local procedure -> aggregate -> record
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.autofuse.model import AutoFuseModel
from src.autofuse.params import DEFAULT_TEMPERATURE, FusionMode, FusionParams, psi_aggregate
from src.fedsim.client import Client, LocalUpdate, local_procedure
from src.fedsim.config import FedConfig
from src.fedsim.metrics import MetricsRecord, eval_global, eval_personalized, window_score
from src.fedsim.server import ServerState, aggregate, sample_clients
from src.scenes.dataset import Scene
from src.splitnet.client_model import ClientModel, shared_params
from src.splitnet.network import NetworkSplit
from src.splitnet.ways import PrivatizationWay, format_way
from src.utils.helpers import STREAM_CLIENT_INIT, STREAM_CLIENT_ROUND, STREAM_ROUND_SAMPLING, derive_rng

logger = logging.getLogger(__name__)

WayOrAuto = Union[PrivatizationWay, FusionMode]

METRICS_COLUMNS = ["round", "global_acc", "local_acc", "elapsed_s"]


@dataclass
class ExperimentResult:
    name: str
    lr: float
    server: ServerState
    clients: List[Client]
    coefficients: List[dict] = field(default_factory=list)

    @property
    def log(self) -> List[MetricsRecord]:
        return self.server.log

    def metrics_frame(self, record_timing: bool = False) -> pd.DataFrame:
        """round,global_acc,local_acc,elapsed_s; elapsed stays blank unless timing is recorded"""
        rows = [{
            "round": r.round,
            "global_acc": r.global_acc,
            "local_acc": r.local_acc,
            "elapsed_s": round(r.elapsed, 3) if record_timing else None,
        } for r in self.log]
        return pd.DataFrame(rows, columns=METRICS_COLUMNS)

    def coefficient_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.coefficients, columns=["round", "mode", "name", "raw", "effective"])

    def final_scores(self) -> Tuple[Optional[float], Optional[float]]:
        """(global, local) window scores; global is None when the way has no global model"""
        has_global = all(r.global_acc is not None for r in self.log)
        global_score = window_score(self.log, "global") if has_global else None
        return global_score, window_score(self.log, "local")


def build_model(split: NetworkSplit, way: WayOrAuto, rng: np.random.Generator,
                temperature: float = DEFAULT_TEMPERATURE):
    if isinstance(way, FusionMode):
        return AutoFuseModel(split, FusionParams.zeros(way, temperature), rng)
    return ClientModel(split, way, rng)


def way_label(way: WayOrAuto, num_blocks: int) -> str:
    if isinstance(way, FusionMode):
        return way.algorithm
    return format_way(way, num_blocks)


def build_clients(scene: Scene, split: NetworkSplit, way: WayOrAuto, cfg: FedConfig, lr: float,
                  temperature: float = DEFAULT_TEMPERATURE) -> List[Client]:
    clients = []
    for k in range(scene.num_clients):
        model = build_model(split, way, derive_rng(cfg.seed, STREAM_CLIENT_INIT, k), temperature)
        train_x, train_y = scene.client_train(k)
        test_x, test_y = scene.client_test(k)
        clients.append(Client(k, model, train_x, train_y, test_x, test_y, lr, cfg.momentum))
    return clients


def _evaluate(t: int, server: ServerState, reference, clients: List[Client], scene: Scene,
              eval_batch_size: int, started: float) -> MetricsRecord:
    global_acc = None
    if not isinstance(reference, ClientModel) or reference.way.has_global_model:
        features, labels = scene.global_test_data()
        global_acc = eval_global(server.theta, features, labels, reference, server.psi, eval_batch_size)
    local_acc, per_client = eval_personalized(clients, eval_batch_size)
    return MetricsRecord(round=t, global_acc=global_acc, local_acc=local_acc, per_client=per_client,
                         elapsed=time.perf_counter() - started)


def run_experiment(scene: Scene, split: NetworkSplit, way: WayOrAuto, cfg: FedConfig, lr: float,
                   threads: int = 1, temperature: float = DEFAULT_TEMPERATURE,
                   eval_batch_size: int = 512) -> ExperimentResult:
    """One federated run at one learning rate"""
    started = time.perf_counter()
    name = way_label(way, split.num_blocks)
    clients = build_clients(scene, split, way, cfg, lr, temperature)
    # index K is outside the client range: the server's evaluation copy
    reference = build_model(split, way, derive_rng(cfg.seed, STREAM_CLIENT_INIT, scene.num_clients), temperature)
    psi0 = reference.psi.copy() if isinstance(reference, AutoFuseModel) else None
    server = ServerState(theta=shared_params(reference), psi=psi0)
    result = ExperimentResult(name, lr, server, clients)
    logger.info(f"🚀 {name} lr={lr}: K={scene.num_clients}, T={cfg.rounds}, threads={threads}")

    # round-0 baseline: every client holds theta_0
    for client in clients:
        client.download(server.theta, server.psi)
    server.record(_evaluate(0, server, reference, clients, scene, eval_batch_size, started))
    if server.psi is not None:
        result.coefficients.extend(server.psi.trace_rows(0))

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for t in range(1, cfg.rounds + 1):
            selected = sample_clients(scene.num_clients, cfg.select_ratio, derive_rng(cfg.seed, STREAM_ROUND_SAMPLING, t))

            def work(k: int) -> LocalUpdate:
                rng = derive_rng(cfg.seed, STREAM_CLIENT_ROUND, t, k)
                psi = server.psi.copy() if server.psi is not None else None
                return local_procedure(clients[k], server.theta, psi, cfg, lr, rng)

            # map keeps submission order, so the reduction is in ascending client id
            updates = list(pool.map(work, selected)) if pool else [work(k) for k in selected]
            trained = [u for u in updates if not u.stats.skipped]
            if trained:
                server.theta = aggregate([u.shared for u in trained])
                if server.psi is not None:
                    server.psi = psi_aggregate([u.psi for u in trained])
            server.round = t

            if t % cfg.record_every == 0:
                record = _evaluate(t, server, reference, [clients[k] for k in selected], scene,
                                   eval_batch_size, started)
                server.record(record)
                if server.psi is not None:
                    result.coefficients.extend(server.psi.trace_rows(t))
                logger.info(f"📊 {name} lr={lr} round {t}: global={record.global_acc} local={record.local_acc}")
    finally:
        if pool:
            pool.shutdown()

    logger.info(f"✅ {name} lr={lr} finished {cfg.rounds} rounds")
    return result


def run_grid(scene: Scene, split: NetworkSplit, way: WayOrAuto, cfg: FedConfig, threads: int = 1,
             temperature: float = DEFAULT_TEMPERATURE, eval_batch_size: int = 512) -> List[ExperimentResult]:
    """One run per learning rate, same seed for each"""
    return [run_experiment(scene, split, way, cfg, lr, threads, temperature, eval_batch_size) for lr in cfg.lrs]
