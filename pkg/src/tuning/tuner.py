"""
參數調校器

在 N ∈ 1..N_max、n_f, n_d ∈ 1..L 的範圍內窮舉，
找出滿足 p_rel_all ≥ p_thresh 且平均控制資訊量最小的 (N, n_f, n_d)。

穩態分佈與 (N, n_f, n_d) 無關，每個情境只求解一次；
整個搜尋格點以 numpy 廣播一次評估。
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from ..analysis.analytic import AnalyticModel, LossBases, build_report, relevance_per_cycle, volume_formula
from ..analysis.asymptotic import asymptotic_bases
from ..core.errors import ModelDomainError
from ..models.params import ProtocolParams, ScenarioParams, SolveMode, Strategy
from ..models.reports import AnalyticReport

if TYPE_CHECKING:
    from ..utils.cache import StationaryCache

DEFAULT_RETRY_LIMIT = 7
DEFAULT_N_LIMIT = 1000
TIE_TOLERANCE = 1e-12

TRACE_COLUMNS = ["N", "n_f", "n_d", "volume", "relevance", "feasible"]


def n_max(gamma: float, n_neighbors: int, p_thresh: float) -> int:
    """
    完整傾印週期的上限 N_max = ⌊2(1 − p_thresh^(1/M))/γ⌋

    Args:
        gamma: 連線期平均長度的倒數（必須為正）
        n_neighbors: 鄰居數 M
        p_thresh: 相關性門檻

    Returns:
        N_max，可能為 0（移動性過高，無可行參數）

    Raises:
        ModelDomainError: γ ≤ 0（上限不存在）或其他參數不合法
    """
    if gamma <= 0.0:
        raise ModelDomainError(f"γ 必須為正數才有 N_max，收到 {gamma}")
    if n_neighbors < 1:
        raise ModelDomainError(f"鄰居數至少為 1，收到 {n_neighbors}")
    if not (0.0 < p_thresh < 1.0):
        raise ModelDomainError(f"相關性門檻必須落在 (0, 1)，收到 {p_thresh}")

    slack = 1.0 - p_thresh ** (1.0 / n_neighbors)
    value = max(int(math.floor(2.0 * slack / gamma)), 0)
    # 浮點捨入修正
    while value > 0 and value * gamma / 2.0 > slack:
        value -= 1
    while (value + 1) * gamma / 2.0 <= slack:
        value += 1
    return value


@dataclass(frozen=True)
class Candidate:
    """搜尋格點上的一組參數及其評估結果"""
    protocol: ProtocolParams
    volume: float
    relevance: float
    # 以模擬評估時的相關性信賴區間半寬，解析評估為 0
    relevance_ci_halfwidth: float = 0.0

    def rank_key(self) -> tuple:
        """同量時的排序：相關性高者優先，再依 N、n_f、n_d 由小到大"""
        return (
            -self.relevance,
            self.protocol.full_dump_period,
            self.protocol.retries_full,
            self.protocol.retries_diff,
        )


def select_candidate(candidates: Sequence[Candidate]) -> Candidate:
    """依 tie_break 規則選出一個候選"""
    if not candidates:
        raise ValueError("候選列表不可為空")
    return min(candidates, key=Candidate.rank_key)


def tie_break(candidates: Sequence[Candidate]) -> ProtocolParams:
    """
    在資訊量相同的可行候選中決定唯一解

    相關性最高者勝出，其次 N 最小、n_f 最小、n_d 最小。
    """
    return select_candidate(candidates).protocol


def _protocol_for(period: int, n_f: int, n_d: int) -> ProtocolParams:
    if period == 1:
        return ProtocolParams.full_dump_only(n_f)
    return ProtocolParams(
        strategy=Strategy.INCREMENTAL,
        full_dump_period=period,
        retries_full=n_f,
        retries_diff=n_d,
    )


@dataclass
class TuningResult:
    """
    調校結果

    Attributes:
        scenario: 情境參數
        mode: 完整模型或漸近解
        feasible: 是否找到滿足門檻的參數
        best: 最佳協定參數
        best_volume: 最佳 ⟨V⟩（元素/時槽）
        best_relevance: 最佳參數的 p_rel_all
        evaluated: 評估的三元組數
        n_max: N 的搜尋上限（γ = 0 時為 n_limit）
        retry_limit: n_f、n_d 的搜尋上限
        on_retry_boundary: 最佳解落在重傳上限
        report: 最佳參數的完整解析報告
        trace: 搜尋軌跡（keep_trace=True 時）
    """
    scenario: ScenarioParams
    mode: SolveMode
    feasible: bool
    best: Optional[ProtocolParams] = None
    best_volume: Optional[float] = None
    best_relevance: Optional[float] = None
    evaluated: int = 0
    n_max: int = 0
    retry_limit: int = DEFAULT_RETRY_LIMIT
    on_retry_boundary: bool = False
    report: Optional[AnalyticReport] = None
    trace: Optional[pd.DataFrame] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        """轉換為字典"""
        return {
            "mode": self.mode.value,
            "feasible": self.feasible,
            "best": self.best.model_dump(mode="json") if self.best else None,
            "best_volume": self.best_volume,
            "best_relevance": self.best_relevance,
            "evaluated": self.evaluated,
            "n_max": self.n_max,
            "retry_limit": self.retry_limit,
            "on_retry_boundary": self.on_retry_boundary,
        }

    def to_row(self) -> dict:
        """CSV 列（不可行時協定與結果欄位留空）"""
        protocol = self.best.to_row() if self.best else {"strategy": None, "N": None, "n_f": None, "n_d": None}
        return {
            "mode": self.mode.value,
            **self.scenario.to_row(),
            **protocol,
            "feasible": self.feasible,
            "volume": self.best_volume,
            "relevance": self.best_relevance,
            "n_max": self.n_max,
            "evaluated": self.evaluated,
            "retry_limit": self.retry_limit,
            "on_retry_boundary": self.on_retry_boundary,
        }


def _grid_relevance(bases: LossBases, scenario: ScenarioParams, periods, n_f, n_d) -> np.ndarray:
    """整個格點的 p_rel_all（相同 BER 的鄰居合併計算）"""
    relevance = np.ones(np.broadcast_shapes(np.shape(periods), np.shape(n_f), np.shape(n_d)))
    groups = Counter(zip(bases.full.tolist(), bases.diff.tolist()))
    for (full, diff), count in groups.items():
        p_hat = relevance_per_cycle(full ** n_f, diff ** n_d, periods)
        relevance = relevance * np.power(p_hat, count)
    startup = 1.0 - scenario.gamma * np.asarray(periods, dtype=float) / 2.0
    return relevance * np.power(startup, scenario.n_neighbors)


def search_bound(
    scenario: ScenarioParams,
    n_limit: int = DEFAULT_N_LIMIT,
    max_period: Optional[int] = None,
) -> tuple[int, int]:
    """
    回傳 (N_max 或 n_limit, 實際搜尋上限)

    γ = 0 時 N_max 不存在，以 n_limit 為上限。
    """
    if scenario.gamma > 0.0:
        bound = n_max(scenario.gamma, scenario.n_neighbors, scenario.p_thresh)
        upper = min(bound, n_limit)
    else:
        bound = upper = n_limit
    if max_period is not None:
        upper = min(upper, max_period)
    return bound, upper


def loss_bases_for(
    scenario: ScenarioParams,
    mode: SolveMode,
    model: Optional[AnalyticModel] = None,
    cache: Optional["StationaryCache"] = None,
) -> LossBases:
    """依模式取得與協定無關的量"""
    if SolveMode(mode) is SolveMode.ASYMPTOTIC:
        return asymptotic_bases(scenario)
    if model is None:
        model = AnalyticModel(scenario, cache=cache)
    return model.loss_bases()


def tune(
    scenario: ScenarioParams,
    mode: SolveMode = SolveMode.EXACT,
    retry_limit: int = DEFAULT_RETRY_LIMIT,
    n_limit: int = DEFAULT_N_LIMIT,
    max_period: Optional[int] = None,
    keep_trace: bool = False,
    model: Optional[AnalyticModel] = None,
    cache: Optional["StationaryCache"] = None,
) -> TuningResult:
    """
    窮舉搜尋最佳 (N, n_f, n_d)

    Args:
        scenario: 情境參數
        mode: exact 使用完整解析模型，asymptotic 使用漸近公式
        retry_limit: n_f、n_d 的上限 L
        n_limit: γ = 0 時 N 的上限
        max_period: 額外的 N 上限（例如 1 表示只用完整傾印）
        keep_trace: 是否保留完整搜尋軌跡
        model: 可重複使用的解析模型（exact 模式）
        cache: 穩態分佈磁碟快取

    Returns:
        TuningResult；找不到可行解時 feasible=False，不丟出例外
    """
    mode = SolveMode(mode)
    if retry_limit < 1:
        raise ModelDomainError(f"重傳上限至少為 1，收到 {retry_limit}")

    bound, upper = search_bound(scenario, n_limit, max_period)
    if upper < 1:
        logger.warning(
            f"N_max = {bound}：γ={scenario.gamma:g}、M={scenario.n_neighbors}、"
            f"p_thresh={scenario.p_thresh:g} 下無可行參數"
        )
        return TuningResult(
            scenario=scenario, mode=mode, feasible=False, n_max=bound, retry_limit=retry_limit,
            trace=pd.DataFrame(columns=TRACE_COLUMNS) if keep_trace else None,
        )

    bases = loss_bases_for(scenario, mode, model=model, cache=cache)

    periods = np.arange(1, upper + 1)[:, None, None]
    retries = np.arange(1, retry_limit + 1)
    n_f = retries[None, :, None]
    n_d = retries[None, None, :]

    volume = np.broadcast_to(
        volume_formula(bases.avg_r, bases.avg_d, periods, n_f, n_d),
        (upper, retry_limit, retry_limit),
    )
    relevance = _grid_relevance(bases, scenario, periods, n_f, n_d)
    feasible = relevance >= scenario.p_thresh
    evaluated = int(volume.size)

    trace = None
    if keep_trace:
        grid_n, grid_f, grid_d = np.meshgrid(
            np.arange(1, upper + 1), retries, retries, indexing="ij"
        )
        trace = pd.DataFrame({
            "N": grid_n.ravel(),
            "n_f": grid_f.ravel(),
            "n_d": grid_d.ravel(),
            "volume": volume.ravel(),
            "relevance": relevance.ravel(),
            "feasible": feasible.ravel(),
        })

    if not feasible.any():
        logger.warning(f"情境 {scenario.scenario_hash()} 在搜尋範圍內無可行參數（{mode.value}）")
        return TuningResult(
            scenario=scenario, mode=mode, feasible=False, evaluated=evaluated,
            n_max=bound, retry_limit=retry_limit, trace=trace,
        )

    best_volume = float(volume[feasible].min())
    ties = feasible & (volume - best_volume <= TIE_TOLERANCE * abs(best_volume))
    candidates = [
        Candidate(
            protocol=_protocol_for(int(i) + 1, int(j) + 1, int(k) + 1),
            volume=float(volume[i, j, k]),
            relevance=float(relevance[i, j, k]),
        )
        for i, j, k in zip(*np.nonzero(ties))
    ]
    winner = select_candidate(candidates)
    best = winner.protocol

    on_boundary = best.retries_full == retry_limit or (
        not best.is_full_dump_only and best.retries_diff == retry_limit
    )
    if on_boundary:
        logger.warning(f"最佳解 {best.label()} 落在重傳上限 {retry_limit}，建議放寬 retry_limit")

    report = build_report(scenario, best, bases)
    logger.info(
        f"調校完成（{mode.value}）: {best.label()}, ⟨V⟩={winner.volume:.6g}, "
        f"p_rel_all={winner.relevance:.6g}, 評估 {evaluated} 組, N 上限 {upper}"
    )

    return TuningResult(
        scenario=scenario,
        mode=mode,
        feasible=True,
        best=best,
        best_volume=winner.volume,
        best_relevance=winner.relevance,
        evaluated=evaluated,
        n_max=bound,
        retry_limit=retry_limit,
        on_retry_boundary=on_boundary,
        report=report,
        trace=trace,
    )


def audit(
    scenario: ScenarioParams,
    result: TuningResult,
    samples: int = 100,
    seed: int = 0,
    n_limit: int = DEFAULT_N_LIMIT,
    max_period: Optional[int] = None,
    model: Optional[AnalyticModel] = None,
) -> list[str]:
    """
    隨機抽查搜尋範圍內的三元組，確認沒有更好的可行解

    每個三元組以逐一評估（非向量化）的方式重新計算。

    Args:
        scenario: 情境參數
        result: 待檢查的調校結果
        samples: 抽查數量
        seed: 亂數種子
        n_limit: 與 tune 相同的 N 上限
        max_period: 與 tune 相同的額外 N 上限
        model: 可重複使用的解析模型

    Returns:
        違規描述列表，空列表表示通過
    """
    _, upper = search_bound(scenario, n_limit, max_period)
    if upper < 1:
        return [] if not result.feasible else ["N 上限為 0 但結果標示為可行"]

    bases = loss_bases_for(scenario, result.mode, model=model)
    rng = np.random.default_rng(seed)
    limit = result.retry_limit
    violations = []

    for _ in range(samples):
        period = int(rng.integers(1, upper + 1))
        n_f = int(rng.integers(1, limit + 1))
        n_d = int(rng.integers(1, limit + 1))
        report = build_report(scenario, _protocol_for(period, n_f, n_d), bases)
        if report.p_rel_all < scenario.p_thresh:
            continue
        if not result.feasible:
            violations.append(f"(N={period}, n_f={n_f}, n_d={n_d}) 可行但結果標示為不可行")
        elif report.avg_v < result.best_volume * (1.0 - 1e-9):
            violations.append(
                f"(N={period}, n_f={n_f}, n_d={n_d}) 的 ⟨V⟩={report.avg_v:.12g} 低於最佳值 {result.best_volume:.12g}"
            )
    return violations


def evaluate_asymptotic_triple(
    scenario: ScenarioParams,
    retry_limit: int = DEFAULT_RETRY_LIMIT,
    n_limit: int = DEFAULT_N_LIMIT,
    model: Optional[AnalyticModel] = None,
) -> tuple[TuningResult, Optional[AnalyticReport]]:
    """
    以漸近公式調校，再用完整解析模型評估所得參數

    Returns:
        (漸近調校結果, 該參數的完整模型報告；不可行時為 None)
    """
    result = tune(scenario, mode=SolveMode.ASYMPTOTIC, retry_limit=retry_limit, n_limit=n_limit)
    if not result.feasible:
        return result, None
    if model is None:
        model = AnalyticModel(scenario)
    return result, model.evaluate(result.best)
