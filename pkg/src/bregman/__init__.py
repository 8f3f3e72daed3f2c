"""Bregman divergence oracles"""
from src.bregman.checks import (
    BoundReport,
    CheckResult,
    LemmaReport,
    check_lemma_minimizer,
    check_ps_upper_bound,
    report_frame,
    run_bregman_suite,
)
from src.bregman.divergence import GeneratorF, bregman_div, kl_divergence, simplex_grid

__all__ = [
    "BoundReport", "CheckResult", "LemmaReport", "check_lemma_minimizer", "check_ps_upper_bound", "report_frame",
    "run_bregman_suite", "GeneratorF", "bregman_div", "kl_divergence", "simplex_grid",
]
