"""
時槽模擬器

每個時槽依序：刪除 → 新增 → 組訊息 → 判定接收 → 鄰居替換 → 記錄。

亂數以 SeedSequence 分成獨立串流（新增、刪除、鄰居替換、每位鄰居的通道），
改變一個參數只會影響自己的串流。每位鄰居每個時槽只抽一個均勻亂數 u，
c 份副本中至少一份收到 ⇔ u ≥ p_err(size)^c，因此同一條軌跡可同時評估
整個 (n_f, n_d) 格點，且降低 BER 不會讓任何一次接收由成功變失敗。
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from ..core.errors import ModelDomainError
from ..models.params import MessageKind, ProtocolParams, ScenarioParams, Strategy
from ..models.reports import RunSummary, SimulationReport
from .neighbors import NeighborPool, apply_reception
from .store import DeltaLog, ElementStore, message_for_slot

DEFAULT_HORIZON = 1_000_000
DEFAULT_RUNS = 20
WARMUP_LIFETIMES = 10.0
# 常態近似 95% 信賴區間
CI_Z = 1.96
# 區塊抽樣大小（固定值，不影響亂數序列）
BLOCK = 4096

TRACE_COLUMNS = ["slot", "kind", "size", "copies", "success", "relevant"]


def default_warmup(mu: float, horizon: int) -> int:
    """暖機預設為 10/μ 時槽，超過 horizon 的一半時截短"""
    warmup = int(math.ceil(WARMUP_LIFETIMES / mu))
    if warmup >= horizon:
        clipped = horizon // 2
        logger.warning(f"預設暖機 {warmup} 時槽不小於 horizon={horizon}，改用 {clipped}")
        return clipped
    return warmup


@dataclass(frozen=True)
class RunOutcome:
    """
    單次執行在整個 (n_f, n_d) 格點上的結果

    Attributes:
        run_index: 執行編號
        volumes: 每組重傳次數的平均資訊量（元素/時槽）
        relevance: 每組重傳次數的全鄰居相關時槽比例
        mean_additions: 每時槽平均新增數
        mean_deletions: 每時槽平均刪除數
        mean_elements: 平均元素數
        trace: 第一組重傳次數的逐時槽追蹤
    """
    run_index: int
    volumes: np.ndarray
    relevance: np.ndarray
    mean_additions: float
    mean_deletions: float
    mean_elements: float
    trace: Optional[pd.DataFrame] = None


class _Streams:
    """一次執行使用的獨立亂數串流"""

    def __init__(self, seed_seq: np.random.SeedSequence, n_neighbors: int):
        children = seed_seq.spawn(3 + n_neighbors)
        self.arrivals = np.random.default_rng(children[0])
        self.deaths = np.random.default_rng(children[1])
        self.churn = np.random.default_rng(children[2])
        self.channels = [np.random.default_rng(child) for child in children[3:]]

    def arrival_block(self, lam: float) -> np.ndarray:
        return self.arrivals.poisson(lam, size=BLOCK)

    def channel_block(self) -> np.ndarray:
        return np.stack([rng.random(BLOCK) for rng in self.channels])


def _check_run_args(horizon: int, warmup: int, runs: int = 1) -> None:
    if horizon < 1:
        raise ModelDomainError(f"horizon 至少為 1，收到 {horizon}")
    if not (0 <= warmup < horizon):
        raise ModelDomainError(f"需滿足 0 ≤ warmup < horizon，收到 warmup={warmup}, horizon={horizon}")
    if runs < 1:
        raise ModelDomainError(f"runs 至少為 1，收到 {runs}")


def simulate_run(
    scenario: ScenarioParams,
    strategy: Strategy,
    period: int,
    retry_pairs: Sequence[tuple[int, int]],
    horizon: int,
    warmup: int,
    seed_seq: np.random.SeedSequence,
    cancel_transients: bool = True,
    record_trace: bool = False,
    run_index: int = 0,
) -> RunOutcome:
    """
    模擬一次執行

    Args:
        scenario: 情境參數
        strategy: 差分更新策略
        period: 完整傾印週期 N
        retry_pairs: 要同時評估的 (n_f, n_d) 組合
        horizon: 總時槽數
        warmup: 不計入統計的時槽數
        seed_seq: 本次執行的種子序列
        cancel_transients: 累積策略是否抵銷傾印後新增又刪除的元素
        record_trace: 是否記錄第一組重傳次數的逐時槽追蹤
        run_index: 執行編號

    Returns:
        RunOutcome
    """
    _check_run_args(horizon, warmup)
    protocol = ProtocolParams(strategy=strategy, full_dump_period=period)
    pairs = np.asarray(retry_pairs, dtype=np.int64).reshape(-1, 2)
    n_pairs = pairs.shape[0]
    full_copies = pairs[:, 0][:, None]
    diff_copies = pairs[:, 1][:, None]

    streams = _Streams(seed_seq, scenario.n_neighbors)
    store = ElementStore(scenario.capacity)
    deltas = DeltaLog(cancel_transients=cancel_transients)
    pool = NeighborPool(scenario.neighbors, scenario.gamma, streams.churn)

    base = np.zeros((n_pairs, pool.size), dtype=bool)
    relevant = np.zeros((n_pairs, pool.size), dtype=bool)
    all_success = np.ones((n_pairs, pool.size), dtype=bool)
    bits_log = scenario.element_size * np.log1p(-pool.bers)
    p_delete = scenario.p_tilde

    full_total = 0
    diff_total = 0
    relevant_slots = np.zeros(n_pairs, dtype=np.int64)
    adds_total = 0
    deletes_total = 0
    elements_total = 0
    trace_rows = [] if record_trace else None

    arrivals = channel = None
    for slot in range(horizon):
        offset = slot % BLOCK
        if offset == 0:
            arrivals = streams.arrival_block(scenario.lam)
            channel = streams.channel_block()

        deltas.begin_slot()
        removed = store.expire(streams.deaths.random(store.count), p_delete) if store.count else store.births[:0]
        deltas.record_deletions(removed)
        admitted = store.admit(int(arrivals[offset]), slot)
        deltas.record_additions(admitted)

        message = message_for_slot(store, deltas, protocol, slot)
        is_full = message.kind is MessageKind.FULL_DUMP
        copies = full_copies if is_full else diff_copies
        if message.size == 0:
            success = all_success
        else:
            p_err = -np.expm1(message.size * bits_log)
            success = channel[:, offset][None, :] >= np.power(p_err[None, :], copies)

        base, relevant = apply_reception(base, relevant, message.kind, success, strategy)
        if is_full:
            deltas.mark_full_dump(slot)

        leaving = pool.churn(slot)
        if leaving.size:
            base[:, leaving] = False
            relevant[:, leaving] = False

        if slot < warmup:
            continue
        if is_full:
            full_total += message.size
        else:
            diff_total += message.size
        all_relevant = relevant.all(axis=1)
        relevant_slots += all_relevant
        adds_total += admitted
        deletes_total += int(removed.size)
        elements_total += store.count
        if trace_rows is not None:
            trace_rows.append((
                slot,
                message.kind.value,
                message.size,
                int(copies[0, 0]),
                ";".join("1" if ok else "0" for ok in success[0]),
                int(all_relevant[0]),
            ))

    measured = horizon - warmup
    volumes = (pairs[:, 0] * full_total + pairs[:, 1] * diff_total) / measured
    trace = pd.DataFrame(trace_rows, columns=TRACE_COLUMNS) if trace_rows is not None else None

    return RunOutcome(
        run_index=run_index,
        volumes=volumes.astype(float),
        relevance=relevant_slots / measured,
        mean_additions=adds_total / measured,
        mean_deletions=deletes_total / measured,
        mean_elements=elements_total / measured,
        trace=trace,
    )


def _run_task(args: tuple) -> RunOutcome:
    return simulate_run(*args)


@dataclass(frozen=True)
class GridResult:
    """
    多次執行在 (n_f, n_d) 格點上的結果

    Attributes:
        pairs: (n_f, n_d) 組合，形狀 (P, 2)
        volumes: 形狀 (runs, P)
        relevance: 形狀 (runs, P)
        outcomes: 依執行編號排列的 RunOutcome
    """
    pairs: np.ndarray
    volumes: np.ndarray
    relevance: np.ndarray
    outcomes: tuple[RunOutcome, ...]

    def mean_volume(self) -> np.ndarray:
        """各組合跨執行的平均資訊量（依執行順序以 fsum 加總）"""
        return np.array([math.fsum(col) / col.size for col in self.volumes.T])

    def mean_relevance(self) -> np.ndarray:
        """各組合跨執行的平均相關性"""
        return np.array([math.fsum(col) / col.size for col in self.relevance.T])

    def relevance_half_width(self) -> np.ndarray:
        """各組合相關性平均值的 95% 信賴區間半寬"""
        return np.array([_half_width(col) for col in self.relevance.T])


def simulate_grid(
    scenario: ScenarioParams,
    strategy: Strategy,
    period: int,
    retry_pairs: Sequence[tuple[int, int]],
    horizon: int = DEFAULT_HORIZON,
    warmup: Optional[int] = None,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    workers: Optional[int] = None,
    cancel_transients: bool = True,
    record_trace: bool = False,
) -> GridResult:
    """
    以多次獨立執行評估一組 (n_f, n_d) 格點

    Args:
        scenario: 情境參數
        strategy: 差分更新策略
        period: 完整傾印週期 N
        retry_pairs: (n_f, n_d) 組合
        horizon: 每次執行的時槽數
        warmup: 暖機時槽數，預設 10/μ
        runs: 執行次數
        seed: 亂數種子
        workers: 平行行程數，預設取 DISSEMINATION_WORKERS
        cancel_transients: 累積策略是否抵銷暫態變動
        record_trace: 是否記錄第 0 次執行的追蹤

    Returns:
        GridResult
    """
    if warmup is None:
        warmup = default_warmup(scenario.mu, horizon)
    _check_run_args(horizon, warmup, runs)
    if workers is None:
        from ..utils.config import get_config
        workers = get_config().workers

    children = np.random.SeedSequence(seed).spawn(runs)
    tasks = [
        (scenario, strategy, period, list(retry_pairs), horizon, warmup, child,
         cancel_transients, record_trace and index == 0, index)
        for index, child in enumerate(children)
    ]

    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=min(workers, runs)) as executor:
            outcomes = tuple(executor.map(_run_task, tasks))
    else:
        outcomes = tuple(_run_task(task) for task in tasks)

    return GridResult(
        pairs=np.asarray(retry_pairs, dtype=np.int64).reshape(-1, 2),
        volumes=np.stack([o.volumes for o in outcomes]),
        relevance=np.stack([o.relevance for o in outcomes]),
        outcomes=outcomes,
    )


def _half_width(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(CI_Z * np.std(values, ddof=1) / math.sqrt(values.size))


def _fmean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def simulate(
    scenario: ScenarioParams,
    protocol: ProtocolParams,
    horizon: int = DEFAULT_HORIZON,
    warmup: Optional[int] = None,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    workers: Optional[int] = None,
    trace_path: Optional[str] = None,
    cancel_transients: bool = True,
) -> SimulationReport:
    """
    模擬一組協定參數

    Args:
        scenario: 情境參數
        protocol: 協定參數
        horizon: 每次執行的時槽數（預設 10⁶）
        warmup: 暖機時槽數（預設 10/μ）
        runs: 執行次數（預設 20）
        seed: 亂數種子
        workers: 平行行程數
        trace_path: 第 0 次執行的逐時槽追蹤 CSV 路徑（格式不保證穩定）
        cancel_transients: 累積策略是否抵銷暫態變動

    Returns:
        SimulationReport
    """
    if warmup is None:
        warmup = default_warmup(scenario.mu, horizon)
    logger.info(
        f"開始模擬: {protocol.label()}, runs={runs}, horizon={horizon}, warmup={warmup}, seed={seed}"
    )

    grid = simulate_grid(
        scenario,
        protocol.strategy,
        protocol.full_dump_period,
        [(protocol.retries_full, protocol.retries_diff)],
        horizon=horizon,
        warmup=warmup,
        runs=runs,
        seed=seed,
        workers=workers,
        cancel_transients=cancel_transients,
        record_trace=trace_path is not None,
    )

    if trace_path is not None and grid.outcomes[0].trace is not None:
        out = Path(trace_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        grid.outcomes[0].trace.to_csv(out, index=False)
        logger.info(f"逐時槽追蹤已寫入 {out}")

    volumes = grid.volumes[:, 0]
    relevance = grid.relevance[:, 0]
    per_run = tuple(
        RunSummary(
            run_index=o.run_index,
            mean_volume=float(o.volumes[0]),
            mean_relevance=float(o.relevance[0]),
            mean_additions=o.mean_additions,
            mean_deletions=o.mean_deletions,
            mean_elements=o.mean_elements,
        )
        for o in grid.outcomes
    )

    report = SimulationReport(
        scenario=scenario,
        protocol=protocol,
        mean_volume=_fmean(volumes.tolist()),
        mean_relevance=min(_fmean(relevance.tolist()), 1.0),
        runs=runs,
        horizon=horizon,
        warmup=warmup,
        seed=seed,
        volume_ci_halfwidth=_half_width(volumes),
        relevance_ci_halfwidth=_half_width(relevance),
        mean_additions=_fmean([o.mean_additions for o in grid.outcomes]),
        mean_deletions=_fmean([o.mean_deletions for o in grid.outcomes]),
        mean_elements=_fmean([o.mean_elements for o in grid.outcomes]),
        per_run=per_run,
    )
    logger.debug(
        f"模擬完成: ⟨V⟩={report.mean_volume:.6g} ± {report.volume_ci_halfwidth:.3g}, "
        f"相關性={report.mean_relevance:.6g} ± {report.relevance_ci_halfwidth:.3g}"
    )
    return report


def simulate_occupancy(
    scenario: ScenarioParams,
    horizon: int = DEFAULT_HORIZON,
    warmup: Optional[int] = None,
    seed: int = 0,
) -> np.ndarray:
    """
    觀察模式：不送訊息，只統計元素數 r 的經驗分佈

    使用與 simulate_run 相同的新增、刪除亂數串流。

    Returns:
        長度 R+1 的經驗分佈
    """
    if warmup is None:
        warmup = default_warmup(scenario.mu, horizon)
    _check_run_args(horizon, warmup)

    streams = _Streams(np.random.SeedSequence(seed), scenario.n_neighbors)
    store = ElementStore(scenario.capacity)
    counts = np.zeros(scenario.capacity + 1, dtype=np.int64)
    p_delete = scenario.p_tilde

    arrivals = None
    for slot in range(horizon):
        offset = slot % BLOCK
        if offset == 0:
            arrivals = streams.arrival_block(scenario.lam)
        if store.count:
            store.expire(streams.deaths.random(store.count), p_delete)
        store.admit(int(arrivals[offset]), slot)
        if slot >= warmup:
            counts[store.count] += 1

    return counts / (horizon - warmup)
