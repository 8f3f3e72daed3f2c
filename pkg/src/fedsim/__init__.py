"""Federated orchestration: sampling, local training, aggregation, metrics"""
from src.fedsim.client import Client, LocalStats, LocalUpdate, local_procedure
from src.fedsim.config import FedConfig
from src.fedsim.metrics import MetricsRecord, eval_global, eval_personalized, select_best, window_score
from src.fedsim.runner import ExperimentResult, run_experiment, run_grid
from src.fedsim.server import ServerState, aggregate, sample_clients

__all__ = [
    "Client", "LocalStats", "LocalUpdate", "local_procedure", "FedConfig", "MetricsRecord", "eval_global",
    "eval_personalized", "select_best", "window_score", "ExperimentResult", "run_experiment", "run_grid",
    "ServerState", "aggregate", "sample_clients",
]
