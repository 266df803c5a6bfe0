"""
模擬模組

時槽模擬器、元素儲存、鄰居狀態與策略比較。
"""

from .compare import compare_strategies, period_candidates, retry_grid
from .engine import (
    GridResult,
    RunOutcome,
    default_warmup,
    simulate,
    simulate_grid,
    simulate_occupancy,
    simulate_run,
)
from .neighbors import NeighborPool, NeighborState, apply_reception, receive
from .store import DeltaLog, ElementStore, Message, message_for_slot

__all__ = [
    "compare_strategies",
    "period_candidates",
    "retry_grid",
    "GridResult",
    "RunOutcome",
    "default_warmup",
    "simulate",
    "simulate_grid",
    "simulate_occupancy",
    "simulate_run",
    "NeighborPool",
    "NeighborState",
    "apply_reception",
    "receive",
    "DeltaLog",
    "ElementStore",
    "Message",
    "message_for_slot",
]
