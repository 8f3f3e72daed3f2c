"""Interpolation sweep over trained double-branch models"""
from src.interp.sweep import InterpGrid, Recommendation, interp_predict, interp_sweep, recommend_way

__all__ = ["InterpGrid", "Recommendation", "interp_predict", "interp_sweep", "recommend_way"]
