"""
機率基礎函數

解析模型與模擬器共用的機率元件：
- 訊息遺失機率（獨立位元錯誤模型）
- 單一時槽內的刪除數分佈（二項分佈）
- 截斷的新增數分佈（Poisson，受容量 R 限制）

二項係數與 Poisson 機率皆在對數空間計算後再取指數，R 達 10⁴ 仍不會溢位。
"""

import math
from typing import Callable

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlog1py, xlogy

from .errors import ModelDomainError

# 可替換的遺失模型介面: (ber, 元素數陣列, 元素位元數) -> 遺失機率陣列
LossFunction = Callable[[float, np.ndarray, int], np.ndarray]


def _check_ber(ber: float) -> None:
    if not (0.0 <= ber < 1.0) or math.isnan(ber):
        raise ModelDomainError(f"位元錯誤率必須落在 [0, 1)，收到 {ber}")


def message_loss_prob(ber: float, s: int, element_size: int) -> float:
    """
    計算含 s 個資訊元素的訊息無法被解碼的機率

    p_err(s) = 1 − (1 − ber)^(s·V₀)

    Args:
        ber: 每位元錯誤機率
        s: 訊息中的資訊元素數
        element_size: 單一元素大小（位元）

    Returns:
        遺失機率，s = 0 時為 0

    Raises:
        ModelDomainError: ber 不在 [0, 1) 或 s、element_size 不合法
    """
    _check_ber(ber)
    if s < 0:
        raise ModelDomainError(f"元素數不可為負數，收到 {s}")
    if element_size < 1:
        raise ModelDomainError(f"元素大小至少 1 位元，收到 {element_size}")

    if s == 0 or ber == 0.0:
        return 0.0
    return float(-math.expm1(s * element_size * math.log1p(-ber)))


def message_loss_probs(ber: float, sizes: np.ndarray, element_size: int) -> np.ndarray:
    """message_loss_prob 的向量化版本，sizes 為元素數陣列"""
    _check_ber(ber)
    sizes = np.asarray(sizes, dtype=float)
    if ber == 0.0:
        return np.zeros_like(sizes)
    return -np.expm1(sizes * element_size * math.log1p(-ber))


def ber_for_loss(p_err: float, s: int, element_size: int) -> float:
    """
    由目標遺失機率反推位元錯誤率

    例如 p_err(R) = 10%、R = 1000、V₀ = 16 位元時約為 6.6e-6。

    Args:
        p_err: 含 s 個元素訊息的目標遺失機率
        s: 元素數（通常為容量 R）
        element_size: 單一元素大小（位元）

    Returns:
        位元錯誤率
    """
    if not (0.0 <= p_err < 1.0):
        raise ModelDomainError(f"目標遺失機率必須落在 [0, 1)，收到 {p_err}")
    if s < 1 or element_size < 1:
        raise ModelDomainError(f"元素數與元素大小必須為正，收到 s={s}, V₀={element_size}")
    return float(-math.expm1(math.log1p(-p_err) / (s * element_size)))


def deletion_prob(mu: float) -> float:
    """單一元素在一個時槽內被刪除的機率 p̃ = 1 − e^(−μ)"""
    return float(-math.expm1(-mu))


def deletion_row(r: int, mu: float) -> np.ndarray:
    """
    給定目前元素數 r，刪除 d = 0..r 個元素的機率向量

    Args:
        r: 目前追蹤的元素數
        mu: 元素平均壽命的倒數

    Returns:
        長度 r+1 的機率向量
    """
    p = deletion_prob(mu)
    d = np.arange(r + 1, dtype=float)
    log_pmf = (
        gammaln(r + 1.0) - gammaln(d + 1.0) - gammaln(r - d + 1.0)
        + xlogy(d, p) + xlog1py(r - d, -p)
    )
    return np.exp(log_pmf)


def deletion_dist(d: int, r: int, mu: float) -> float:
    """
    在 r 個元素中刪除恰好 d 個的機率

    C(r,d)·p̃^d·(1−p̃)^(r−d)

    Raises:
        ModelDomainError: d < 0 或 d > r
    """
    if d < 0 or d > r:
        raise ModelDomainError(f"刪除數必須滿足 0 ≤ d ≤ r，收到 d={d}, r={r}")
    return float(deletion_row(r, mu)[d])


def deletion_matrix(capacity: int, mu: float) -> np.ndarray:
    """
    刪除分佈矩陣 D[r, d] = p_{d|r}，r, d = 0..R（下三角）

    Args:
        capacity: 容量 R
        mu: 元素平均壽命的倒數

    Returns:
        (R+1)×(R+1) 矩陣
    """
    p = deletion_prob(mu)
    r = np.arange(capacity + 1)[:, None]
    d = np.arange(capacity + 1)[None, :]
    return stats.binom.pmf(d, r, p)


def poisson_pmf(k: np.ndarray, lam: float) -> np.ndarray:
    """未截斷的 Poisson 機率質量（對數空間計算）"""
    k = np.asarray(k, dtype=float)
    return np.exp(xlogy(k, lam) - lam - gammaln(k + 1.0))


def poisson_tail(k: int, lam: float) -> float:
    """P(X ≥ k)，X ~ Poisson(λ)"""
    if k <= 0:
        return 1.0
    if lam == 0.0:
        return 0.0
    return float(stats.poisson.sf(k - 1, lam))


def poisson_tails(upto: int, lam: float) -> np.ndarray:
    """tails[j] = P(X ≥ j)，j = 0..upto"""
    if lam == 0.0:
        tails = np.zeros(upto + 1)
        tails[0] = 1.0
        return tails
    return stats.poisson.sf(np.arange(upto + 1) - 1, lam)


def addition_row(room: int, lam: float) -> np.ndarray:
    """
    剩餘容量為 room 時新增 n = 0..room 個元素的機率向量

    n < room 時為 Poisson 機率；n = room 承接其餘尾端機率；room = 0 時為 [1]。

    Args:
        room: 剩餘容量 R + d − r
        lam: 每時槽平均新增元素數

    Returns:
        長度 room+1 的機率向量
    """
    if room < 0:
        raise ModelDomainError(f"剩餘容量不可為負數，收到 {room}")
    row = np.empty(room + 1)
    if room == 0:
        row[0] = 1.0
        return row
    row[:room] = poisson_pmf(np.arange(room), lam)
    row[room] = poisson_tail(room, lam)
    return row


def addition_dist(n: int, r: int, d: int, lam: float, capacity: int) -> float:
    """
    給定 r 與 d，本時槽新增 n 個元素的條件機率

    Args:
        n: 新增元素數
        r: 時槽開始時的元素數
        d: 本時槽刪除的元素數
        lam: 每時槽平均新增元素數
        capacity: 容量 R

    Returns:
        條件機率 p_{n|r,d}

    Raises:
        ModelDomainError: 參數不滿足 0 ≤ d ≤ r ≤ R 或 0 ≤ n ≤ R + d − r
    """
    if not (0 <= d <= r <= capacity):
        raise ModelDomainError(f"需滿足 0 ≤ d ≤ r ≤ R，收到 d={d}, r={r}, R={capacity}")
    room = capacity + d - r
    if n < 0 or n > room:
        raise ModelDomainError(f"新增數必須滿足 0 ≤ n ≤ R + d − r = {room}，收到 n={n}")

    if n == room:
        return 1.0 if room == 0 else poisson_tail(room, lam)
    return float(poisson_pmf(n, lam))
