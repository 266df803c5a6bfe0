"""
解析模型模組

平均控制資訊量、遺失機率與相關性機率的封閉解，以及高負載漸近解。
"""

from .analytic import (
    AnalyticModel,
    LossBases,
    avg_control_volume,
    build_report,
    loss_prob_diff,
    loss_prob_full,
    mean_deletions,
    mean_elements,
    message_size_distribution,
    relevance_all,
    relevance_per_cycle,
    relevance_per_neighbor,
    startup_factor,
    volume_formula,
)
from .asymptotic import asymptotic_bases, asymptotic_report

__all__ = [
    "AnalyticModel",
    "LossBases",
    "avg_control_volume",
    "build_report",
    "loss_prob_diff",
    "loss_prob_full",
    "mean_deletions",
    "mean_elements",
    "message_size_distribution",
    "relevance_all",
    "relevance_per_cycle",
    "relevance_per_neighbor",
    "startup_factor",
    "volume_formula",
    "asymptotic_bases",
    "asymptotic_report",
]
