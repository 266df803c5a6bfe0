"""
轉移矩陣建構

追蹤元素數 r 的單一時槽轉移：先依二項分佈刪除，再把截斷 Poisson 新增
放進剩餘容量 R − (r − d)。

P[r][r'] = Σ_{d, n: r − d + n = r'} p_{d|r} · p_{n|r,d}

刪除後存活數 S = r − d，新增數在 r' < R 時不受截斷，因此第 r 列即為
min(S + X, R) 的分佈（X ~ Poisson(λ)），可用一次卷積算出。
"""

from dataclasses import dataclass

import numpy as np
from loguru import logger

from ..core.errors import ModelDomainError
from ..core.probability import deletion_row, poisson_pmf, poisson_tails
from ..models.params import ScenarioParams

ROW_SUM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class TransitionKernel:
    """
    稠密的列隨機矩陣 P[r][r']，r, r' = 0..R

    建構後矩陣設為唯讀。
    """
    matrix: np.ndarray

    def __post_init__(self):
        matrix = self.matrix
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ModelDomainError(f"轉移矩陣必須為方陣，收到形狀 {matrix.shape}")
        if np.any(matrix < 0.0) or np.any(matrix > 1.0):
            raise ModelDomainError("轉移矩陣的元素必須落在 [0, 1]")
        worst = float(np.max(np.abs(matrix.sum(axis=1) - 1.0)))
        if worst > ROW_SUM_TOLERANCE:
            raise ModelDomainError(f"轉移矩陣列和偏離 1 達 {worst:.3e}")
        matrix.setflags(write=False)

    @property
    def size(self) -> int:
        """狀態數 R + 1"""
        return self.matrix.shape[0]


def kernel_row(
    r: int,
    lam: float,
    mu: float,
    capacity: int,
    arrivals: np.ndarray | None = None,
    tails: np.ndarray | None = None,
) -> np.ndarray:
    """
    計算轉移矩陣的第 r 列

    Args:
        r: 時槽開始時的元素數
        lam: 每時槽平均新增元素數
        mu: 元素平均壽命的倒數
        capacity: 容量 R
        arrivals: 預先計算的 Poisson 機率 P(X = k)，k = 0..R−1
        tails: 預先計算的尾端機率 P(X ≥ j)，j = 0..R

    Returns:
        長度 R+1 的機率向量
    """
    if arrivals is None:
        arrivals = poisson_pmf(np.arange(capacity), lam)
    if tails is None:
        tails = poisson_tails(capacity, lam)

    # 存活數 s = r − d
    survivors = deletion_row(r, mu)[::-1]
    row = np.empty(capacity + 1)
    row[:capacity] = np.convolve(survivors, arrivals)[:capacity]
    row[capacity] = survivors @ tails[capacity - np.arange(r + 1)]
    # 捨入誤差
    return np.clip(row, 0.0, 1.0)


def build_kernel(scenario: ScenarioParams) -> TransitionKernel:
    """
    建構情境的單一時槽轉移矩陣

    Args:
        scenario: 情境參數（只用到 λ、μ、R）

    Returns:
        TransitionKernel
    """
    return build_kernel_from(scenario.lam, scenario.mu, scenario.capacity)


def build_kernel_from(lam: float, mu: float, capacity: int) -> TransitionKernel:
    """以 (λ, μ, R) 建構轉移矩陣"""
    arrivals = poisson_pmf(np.arange(capacity), lam)
    tails = poisson_tails(capacity, lam)

    matrix = np.empty((capacity + 1, capacity + 1))
    for r in range(capacity + 1):
        matrix[r] = kernel_row(r, lam, mu, capacity, arrivals, tails)

    logger.debug(f"轉移矩陣建構完成: λ={lam:.6g}, μ={mu:.6g}, R={capacity}")
    return TransitionKernel(matrix=matrix)
