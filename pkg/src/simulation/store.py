"""
元素儲存與差分紀錄

ElementStore 保存目前追蹤的資訊元素（唯一 id 與出生時槽），數量不超過 R。
DeltaLog 以計數器記錄本時槽與上次完整傾印以來的變動，用來決定差分訊息大小。
"""

from dataclasses import dataclass

import numpy as np

from ..models.params import MessageKind, ProtocolParams, Strategy


class ElementStore:
    """
    固定容量的元素儲存

    Attributes:
        capacity: 容量 R
        count: 目前元素數 r
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._ids = np.empty(capacity, dtype=np.int64)
        self._births = np.empty(capacity, dtype=np.int64)
        self.count = 0
        self._next_id = 0

    @property
    def ids(self) -> np.ndarray:
        """存活元素的 id"""
        return self._ids[:self.count]

    @property
    def births(self) -> np.ndarray:
        """存活元素的出生時槽"""
        return self._births[:self.count]

    def expire(self, uniforms: np.ndarray, p_delete: float) -> np.ndarray:
        """
        每個元素獨立地以機率 p̃ 刪除

        Args:
            uniforms: 長度為 count 的均勻亂數
            p_delete: 單一時槽的刪除機率

        Returns:
            被刪除元素的出生時槽
        """
        dead = uniforms < p_delete
        if not dead.any():
            return self._births[:0]
        removed = self._births[:self.count][dead].copy()
        keep = ~dead
        kept = int(keep.sum())
        self._ids[:kept] = self._ids[:self.count][keep]
        self._births[:kept] = self._births[:self.count][keep]
        self.count = kept
        return removed

    def admit(self, arrivals: int, slot: int) -> int:
        """
        放入新元素，超過容量的部分捨棄

        Returns:
            實際放入的數量
        """
        admitted = min(arrivals, self.capacity - self.count)
        if admitted > 0:
            end = self.count + admitted
            self._ids[self.count:end] = np.arange(self._next_id, self._next_id + admitted)
            self._births[self.count:end] = slot
            self._next_id += admitted
            self.count = end
        return admitted


class DeltaLog:
    """
    差分訊息大小的紀錄

    增量策略只看本時槽的新增與刪除；累積策略看上次完整傾印之後的變動。
    cancel_transients=True 時，傾印後新增又刪除的元素互相抵銷。
    """

    def __init__(self, cancel_transients: bool = True):
        self.cancel_transients = cancel_transients
        self.dump_slot = -1
        self.slot_adds = 0
        self.slot_deletes = 0
        self.adds_since_dump = 0
        self.deletes_since_dump = 0
        self.live_adds_since_dump = 0
        self.base_deletes_since_dump = 0

    def begin_slot(self) -> None:
        """時槽開始時清除本時槽計數"""
        self.slot_adds = 0
        self.slot_deletes = 0

    def record_deletions(self, births: np.ndarray) -> None:
        """記錄被刪除元素（以出生時槽判斷是否為傾印後才加入）"""
        removed = int(births.size)
        if removed == 0:
            return
        transient = int(np.count_nonzero(births > self.dump_slot))
        self.slot_deletes += removed
        self.deletes_since_dump += removed
        self.live_adds_since_dump -= transient
        self.base_deletes_since_dump += removed - transient

    def record_additions(self, admitted: int) -> None:
        """記錄新加入的元素數"""
        self.slot_adds += admitted
        self.adds_since_dump += admitted
        self.live_adds_since_dump += admitted

    def mark_full_dump(self, slot: int) -> None:
        """送出完整傾印後重設累積計數"""
        self.dump_slot = slot
        self.adds_since_dump = 0
        self.deletes_since_dump = 0
        self.live_adds_since_dump = 0
        self.base_deletes_since_dump = 0

    @property
    def incremental_size(self) -> int:
        """上一則訊息之後的變動數"""
        return self.slot_adds + self.slot_deletes

    @property
    def cumulative_size(self) -> int:
        """上次完整傾印之後的變動數"""
        if self.cancel_transients:
            return self.live_adds_since_dump + self.base_deletes_since_dump
        return self.adds_since_dump + self.deletes_since_dump


@dataclass(frozen=True)
class Message:
    """控制訊息描述（大小以元素計）"""
    kind: MessageKind
    size: int


def message_for_slot(store: ElementStore, deltas: DeltaLog, protocol: ProtocolParams, slot: int) -> Message:
    """
    決定本時槽要送出的訊息

    t mod N = 0 時送完整傾印（大小 r），否則依策略送差分更新。
    """
    if slot % protocol.full_dump_period == 0:
        return Message(MessageKind.FULL_DUMP, store.count)
    if protocol.strategy is Strategy.CUMULATIVE:
        return Message(MessageKind.DIFFERENTIAL, deltas.cumulative_size)
    return Message(MessageKind.DIFFERENTIAL, deltas.incremental_size)
