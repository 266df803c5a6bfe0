"""
穩態分佈模組

建構追蹤元素數的轉移矩陣並求其穩態分佈。
"""

from .kernel import TransitionKernel, build_kernel, build_kernel_from, kernel_row
from .solver import (
    SolverMethod,
    StationaryDistribution,
    solve_direct,
    solve_power,
    solve_stationary,
    stationary_for,
    stationary_residual,
)

__all__ = [
    "TransitionKernel",
    "build_kernel",
    "build_kernel_from",
    "kernel_row",
    "SolverMethod",
    "StationaryDistribution",
    "solve_direct",
    "solve_power",
    "solve_stationary",
    "stationary_for",
    "stationary_residual",
]
