"""
λ → ∞ 的漸近解

高負載時元素數固定在容量 R，不需要求穩態分佈：
- p_f = p_err(R)^n_f
- p_d = [Σ_d p_{d|R}·p_err(2d)]^n_d（刪除幾個就補回幾個）
- ⟨d⟩ = (1 − e^(−μ))·R
"""

import numpy as np

from ..core.probability import LossFunction, deletion_row, message_loss_probs
from ..models.params import ProtocolParams, ScenarioParams, SolveMode
from ..models.reports import AnalyticReport
from .analytic import LossBases, build_report


def asymptotic_bases(
    scenario: ScenarioParams,
    loss_fn: LossFunction = message_loss_probs,
) -> LossBases:
    """漸近情況下與協定無關的量（忽略 λ）"""
    capacity = scenario.capacity
    deletions = deletion_row(capacity, scenario.mu)
    diff_sizes = 2 * np.arange(capacity + 1)

    full, diff = [], []
    for ber in scenario.neighbors:
        full.append(float(loss_fn(ber, np.array([capacity]), scenario.element_size)[0]))
        diff.append(float(deletions @ loss_fn(ber, diff_sizes, scenario.element_size)))

    return LossBases(
        avg_r=float(capacity),
        avg_d=scenario.p_tilde * capacity,
        full=np.array(full),
        diff=np.array(diff),
        mode=SolveMode.ASYMPTOTIC,
    )


def asymptotic_report(
    scenario: ScenarioParams,
    protocol: ProtocolParams,
    loss_fn: LossFunction = message_loss_probs,
) -> AnalyticReport:
    """
    以漸近公式評估一組協定參數

    Args:
        scenario: 情境參數
        protocol: 協定參數
        loss_fn: 單則訊息遺失模型

    Returns:
        mode = asymptotic 的 AnalyticReport
    """
    return build_report(scenario, protocol, asymptotic_bases(scenario, loss_fn), scenario.model_warnings())
