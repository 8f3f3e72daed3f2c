"""Learn-to-aggregate fusion of shared and private branches"""
from src.autofuse.fusion import (
    FusionTrace,
    GumbelDraws,
    fuse_features_cs,
    fuse_features_hs,
    fuse_features_sa,
    fuse_outputs,
)
from src.autofuse.model import AutoFuseModel, auto_forward
from src.autofuse.params import AUTO_WAYS, FusionMode, FusionParams, parse_auto_way, psi_aggregate

__all__ = [
    "FusionTrace", "GumbelDraws", "fuse_features_cs", "fuse_features_hs", "fuse_features_sa", "fuse_outputs",
    "AutoFuseModel", "auto_forward", "AUTO_WAYS", "FusionMode", "FusionParams",
    "parse_auto_way", "psi_aggregate",
]
