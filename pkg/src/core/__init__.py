"""
模型核心模組

提供解析模型與模擬器共用的機率基礎函數與例外類別。
"""

from .errors import ConfigError, ConvergenceError, DisseminationError, ModelDomainError
from .probability import (
    LossFunction,
    addition_dist,
    addition_row,
    ber_for_loss,
    deletion_dist,
    deletion_matrix,
    deletion_prob,
    deletion_row,
    message_loss_prob,
    message_loss_probs,
    poisson_pmf,
    poisson_tail,
    poisson_tails,
)

__all__ = [
    "DisseminationError",
    "ModelDomainError",
    "ConvergenceError",
    "ConfigError",
    "LossFunction",
    "message_loss_prob",
    "message_loss_probs",
    "ber_for_loss",
    "deletion_prob",
    "deletion_dist",
    "deletion_row",
    "deletion_matrix",
    "addition_dist",
    "addition_row",
    "poisson_pmf",
    "poisson_tail",
    "poisson_tails",
]
