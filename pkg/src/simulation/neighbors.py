"""
鄰居狀態

每位鄰居記錄是否持有最近一次完整傾印（base）與資訊是否相關（relevant）。
模擬器以陣列形式一次更新所有鄰居與所有 (n_f, n_d) 組合。
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from ..models.params import MessageKind, Strategy


@dataclass(frozen=True)
class NeighborState:
    """
    單一鄰居的狀態

    Attributes:
        ber: 位元錯誤率
        connected_until: 連線期結束的時槽
        has_full_dump_base: 是否收到最近一次完整傾印
        relevant: 資訊是否為最新
        joined_at: 加入的時槽
    """
    ber: float
    connected_until: float = math.inf
    has_full_dump_base: bool = False
    relevant: bool = False
    joined_at: int = 0


def apply_reception(
    base: np.ndarray,
    relevant: np.ndarray,
    kind: MessageKind,
    success: np.ndarray,
    strategy: Strategy,
) -> tuple[np.ndarray, np.ndarray]:
    """
    依接收結果更新 (base, relevant)，參數可為任意形狀的布林陣列

    - 完整傾印：成功則兩者為真，失敗則兩者為假
    - 增量差分：relevant 只在成功時保留
    - 累積差分：持有傾印且成功即恢復相關
    """
    if kind is MessageKind.FULL_DUMP:
        return success.copy(), success.copy()
    if strategy is Strategy.CUMULATIVE:
        return base, base & success
    return base, relevant & success


def receive(neighbor: NeighborState, kind: MessageKind, success: bool, strategy: Strategy) -> NeighborState:
    """單一鄰居收到（或未收到）一則訊息後的新狀態"""
    base, relevant = apply_reception(
        np.array(neighbor.has_full_dump_base),
        np.array(neighbor.relevant),
        kind,
        np.array(success),
        strategy,
    )
    return replace(neighbor, has_full_dump_base=bool(base), relevant=bool(relevant))


class NeighborPool:
    """
    M 位鄰居的連線期與替換

    鄰居離開時立即以相同 BER 的新鄰居取代，新鄰居在收到完整傾印前不相關。
    """

    def __init__(self, bers: tuple[float, ...], gamma: float, rng: np.random.Generator):
        self.bers = np.asarray(bers, dtype=float)
        self.gamma = gamma
        self._rng = rng
        self.connected_until = self._durations(self.bers.size, start=0)
        self.joined_at = np.zeros(self.bers.size, dtype=np.int64)

    @property
    def size(self) -> int:
        """鄰居數 M"""
        return self.bers.size

    def _durations(self, count: int, start: int) -> np.ndarray:
        if self.gamma <= 0.0:
            return np.full(count, math.inf)
        return start + self._rng.exponential(1.0 / self.gamma, size=count)

    def churn(self, slot: int) -> np.ndarray:
        """
        替換連線期已結束的鄰居

        Returns:
            被替換的鄰居索引
        """
        leaving = np.flatnonzero(self.connected_until <= slot)
        if leaving.size:
            self.connected_until[leaving] = self._durations(leaving.size, start=slot)
            self.joined_at[leaving] = slot
        return leaving
