"""
穩態分佈求解

提供兩個獨立的求解器：
- 直接法：解 (Pᵀ − I)π = 0，並以 Σπ = 1 取代最後一條方程式
- 冪次迭代：π ← πP 直到殘差低於門檻

R ≤ 2000 時自動選用直接法，更大的 R 改用冪次迭代。
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import numpy as np
import pandas as pd
import scipy.linalg
from loguru import logger

from ..core.errors import ConvergenceError, ModelDomainError
from ..models.params import ScenarioParams
from .kernel import TransitionKernel, build_kernel_from

if TYPE_CHECKING:
    from ..utils.cache import StationaryCache

DIRECT_SOLVE_MAX_STATES = 2001
POWER_TOLERANCE = 1e-10
POWER_MAX_ITERATIONS = 1_000_000
RESIDUAL_LIMIT = 1e-8
FLUSH_BELOW = 1e-300
NEGATIVE_NOISE = 1e-10


class SolverMethod(str, Enum):
    """求解方法"""
    AUTO = "auto"
    DIRECT = "direct"
    POWER = "power"


@dataclass(frozen=True)
class StationaryDistribution:
    """
    穩態分佈 π_0..π_R

    Attributes:
        pi: 機率向量（唯讀）
        residual: ‖πP − π‖∞
        method: 使用的求解方法
        iterations: 冪次迭代次數（直接法為 0）
    """
    pi: np.ndarray
    residual: float = 0.0
    method: str = SolverMethod.DIRECT.value
    iterations: int = 0

    def __post_init__(self):
        pi = self.pi
        if pi.ndim != 1 or pi.size == 0:
            raise ModelDomainError("穩態分佈必須為非空的一維向量")
        if np.any(pi < 0.0):
            raise ModelDomainError("穩態分佈不可含負值")
        total = math.fsum(pi)
        if abs(total - 1.0) > 1e-10:
            raise ModelDomainError(f"穩態分佈總和為 {total:.15g}，應為 1")
        pi.setflags(write=False)

    @classmethod
    def point_mass(cls, capacity: int, r: int) -> "StationaryDistribution":
        """集中在 r 的退化分佈"""
        pi = np.zeros(capacity + 1)
        pi[r] = 1.0
        return cls(pi=pi, method="point_mass")

    @property
    def capacity(self) -> int:
        """容量 R"""
        return self.pi.size - 1

    def mean(self) -> float:
        """Σ r·π_r"""
        return float(np.arange(self.pi.size) @ self.pi)

    def cdf(self) -> np.ndarray:
        """累積分佈 F(r) = Σ_{k≤r} π_k"""
        return np.cumsum(self.pi)

    def to_csv(self, path: str) -> Path:
        """
        輸出除錯用的 CSV（欄位 r, pi_r）

        Args:
            path: 輸出路徑

        Returns:
            寫入的檔案路徑
        """
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame({"r": np.arange(self.pi.size), "pi_r": self.pi})
        frame.to_csv(out, index=False, float_format="%.12g")
        return out


def stationary_residual(pi: np.ndarray, kernel: TransitionKernel) -> float:
    """‖πP − π‖∞"""
    return float(np.max(np.abs(pi @ kernel.matrix - pi)))


def solve_direct(kernel: TransitionKernel) -> np.ndarray:
    """
    直接解線性方程組

    (Pᵀ − I) 的各列相加為零，任一條方程式都可由其餘推得，
    因此以正規化條件取代最後一條。
    """
    size = kernel.size
    system = kernel.matrix.T - np.eye(size)
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    return scipy.linalg.solve(system, rhs)


def solve_power(
    kernel: TransitionKernel,
    tol: float = POWER_TOLERANCE,
    max_iter: int = POWER_MAX_ITERATIONS,
) -> tuple[np.ndarray, int]:
    """
    冪次迭代

    Args:
        kernel: 轉移矩陣
        tol: 殘差門檻
        max_iter: 迭代上限

    Returns:
        (π, 迭代次數)

    Raises:
        ConvergenceError: 超過迭代上限
    """
    matrix = kernel.matrix
    pi = np.full(kernel.size, 1.0 / kernel.size)
    residual = math.inf

    for iteration in range(1, max_iter + 1):
        pi_next = pi @ matrix
        residual = float(np.max(np.abs(pi_next - pi)))
        pi = pi_next / pi_next.sum()
        if residual < tol:
            return pi, iteration

    raise ConvergenceError("冪次迭代未收斂", residual=residual, iterations=max_iter)


def solve_stationary(
    kernel: TransitionKernel,
    method: SolverMethod = SolverMethod.AUTO,
    tol: float = POWER_TOLERANCE,
    max_iter: int = POWER_MAX_ITERATIONS,
) -> StationaryDistribution:
    """
    求轉移矩陣的穩態分佈

    Args:
        kernel: 列隨機轉移矩陣
        method: 求解方法，AUTO 依狀態數選擇
        tol: 冪次迭代的殘差門檻
        max_iter: 冪次迭代上限

    Returns:
        StationaryDistribution，滿足 πP = π、Σπ = 1

    Raises:
        ConvergenceError: 迭代未收斂或結果殘差過大
    """
    method = SolverMethod(method)
    if method is SolverMethod.AUTO:
        method = SolverMethod.DIRECT if kernel.size <= DIRECT_SOLVE_MAX_STATES else SolverMethod.POWER

    iterations = 0
    if method is SolverMethod.DIRECT:
        pi = solve_direct(kernel)
    else:
        pi, iterations = solve_power(kernel, tol=tol, max_iter=max_iter)

    if pi.min() < -NEGATIVE_NOISE:
        raise ConvergenceError(
            "穩態解出現明顯負值",
            residual=stationary_residual(pi, kernel),
            iterations=iterations,
        )
    pi = np.clip(pi, 0.0, None)
    pi = pi / math.fsum(pi)
    pi[pi < FLUSH_BELOW] = 0.0

    residual = stationary_residual(pi, kernel)
    if residual >= RESIDUAL_LIMIT:
        raise ConvergenceError("穩態解殘差過大", residual=residual, iterations=iterations)

    logger.debug(
        f"穩態分佈求解完成: 方法={method.value}, 狀態數={kernel.size}, "
        f"迭代={iterations}, 殘差={residual:.3e}"
    )
    return StationaryDistribution(pi=pi, residual=residual, method=method.value, iterations=iterations)


@lru_cache(maxsize=64)
def _solve_cached(lam: float, mu: float, capacity: int) -> StationaryDistribution:
    return solve_stationary(build_kernel_from(lam, mu, capacity))


def stationary_for(
    scenario: ScenarioParams,
    cache: Optional["StationaryCache"] = None,
) -> StationaryDistribution:
    """
    取得情境的穩態分佈（同一組 λ、μ、R 只求解一次）

    Args:
        scenario: 情境參數
        cache: 選用的磁碟快取

    Returns:
        StationaryDistribution
    """
    if cache is not None:
        cached = cache.get(scenario.lam, scenario.mu, scenario.capacity)
        if cached is not None:
            return cached

    distribution = _solve_cached(scenario.lam, scenario.mu, scenario.capacity)

    if cache is not None:
        cache.set(scenario.lam, scenario.mu, scenario.capacity, distribution)
    return distribution
