"""
參數調校模組
"""

from .tuner import (
    Candidate,
    TuningResult,
    audit,
    evaluate_asymptotic_triple,
    n_max,
    search_bound,
    select_candidate,
    tie_break,
    tune,
)

__all__ = [
    "Candidate",
    "TuningResult",
    "audit",
    "evaluate_asymptotic_triple",
    "n_max",
    "search_bound",
    "select_candidate",
    "tie_break",
    "tune",
]
