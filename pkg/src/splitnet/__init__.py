"""Block / split / privatization calculus"""
from src.splitnet.client_model import (
    BranchOutputs,
    ClientModel,
    LossResult,
    build_client_model,
    forward_way,
    load_shared,
    local_loss,
    predict,
    shared_params,
)
from src.splitnet.network import NetworkSplit, build_cnn_split, build_mlp_split, split_layers
from src.splitnet.ways import PrivatizationWay, WayKind, enumerate_ways, format_way, parse_way

__all__ = [
    "BranchOutputs", "ClientModel", "LossResult", "build_client_model", "forward_way", "load_shared",
    "local_loss", "predict", "shared_params", "NetworkSplit", "build_cnn_split", "build_mlp_split", "split_layers", "PrivatizationWay",
    "WayKind", "enumerate_ways", "format_way", "parse_way",
]
