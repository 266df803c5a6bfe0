"""
增量與累積策略比較

累積策略沒有解析模型，因此兩種策略都以模擬評估可行性：
對每個 (負載, μ) 與策略，在 N 的幾何格點與 (n_f, n_d) 格點上找出
相關性達門檻且平均資訊量最小的參數。同一個 N 的整個重傳格點共用一組模擬軌跡。
"""

from typing import Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from ..models.params import ProtocolParams, ScenarioParams, Strategy
from ..tuning.tuner import TIE_TOLERANCE, Candidate, search_bound, select_candidate
from .engine import DEFAULT_HORIZON, simulate_grid

COMPARED_STRATEGIES = (Strategy.INCREMENTAL, Strategy.CUMULATIVE)


def period_candidates(upper: int, points: int) -> list[int]:
    """1..upper 之間的幾何格點（含兩端）"""
    if upper < 1:
        return []
    grid = np.unique(np.rint(np.geomspace(1, upper, num=max(points, 1))).astype(int))
    return [int(n) for n in grid]


def retry_grid(retry_limit: int, period: int) -> list[tuple[int, int]]:
    """N = 1 時 n_d 用不到，只展開 n_f"""
    retries = range(1, retry_limit + 1)
    if period == 1:
        return [(n_f, 1) for n_f in retries]
    return [(n_f, n_d) for n_f in retries for n_d in retries]


def best_by_simulation(
    scenario: ScenarioParams,
    strategy: Strategy,
    periods: Sequence[int],
    retry_limit: int,
    runs: int,
    seed: int,
    horizon: int,
    warmup: Optional[int],
    workers: Optional[int] = None,
    cancel_transients: bool = True,
) -> tuple[Optional[Candidate], int]:
    """
    以模擬結果搜尋單一策略的最佳參數

    相關性平均值減去 95% 信賴區間半寬後仍達門檻才算可行。

    Returns:
        (最佳候選或 None, 評估的組合數)
    """
    feasible: list[Candidate] = []
    evaluated = 0
    for period in periods:
        pairs = retry_grid(retry_limit, period)
        grid = simulate_grid(
            scenario, strategy, period, pairs,
            horizon=horizon, warmup=warmup, runs=runs, seed=seed,
            workers=workers, cancel_transients=cancel_transients,
        )
        evaluated += len(pairs)
        estimates = zip(pairs, grid.mean_volume(), grid.mean_relevance(), grid.relevance_half_width())
        for (n_f, n_d), volume, relevance, half_width in estimates:
            # 信賴區間下界仍須達門檻
            if relevance - half_width < scenario.p_thresh:
                continue
            feasible.append(Candidate(
                protocol=ProtocolParams(
                    strategy=strategy, full_dump_period=period, retries_full=n_f, retries_diff=n_d
                ),
                volume=float(volume),
                relevance=float(relevance),
                relevance_ci_halfwidth=float(half_width),
            ))

    if not feasible:
        return None, evaluated
    best_volume = min(c.volume for c in feasible)
    ties = [c for c in feasible if c.volume - best_volume <= TIE_TOLERANCE * abs(best_volume)]
    return select_candidate(ties), evaluated


def compare_strategies(
    scenario: ScenarioParams,
    p_thresh: Optional[float] = None,
    load_grid: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5),
    mu_grid: Optional[Sequence[float]] = None,
    runs: int = 20,
    seed: int = 0,
    horizon: int = DEFAULT_HORIZON,
    warmup: Optional[int] = None,
    retry_limit: int = 3,
    period_points: int = 12,
    n_limit: int = 1000,
    workers: Optional[int] = None,
    cancel_transients: bool = True,
) -> pd.DataFrame:
    """
    比較增量與累積策略的最佳資訊量

    Args:
        scenario: 基準情境（λ、μ 會被格點覆寫）
        p_thresh: 相關性門檻，預設沿用情境設定
        load_grid: 負載格點
        mu_grid: μ 格點，預設只用情境的 μ
        runs: 每個格點的執行次數
        seed: 亂數種子（所有格點共用，形成共同亂數）
        horizon: 每次執行的時槽數
        warmup: 暖機時槽數
        retry_limit: n_f、n_d 的搜尋上限
        period_points: N 的幾何格點數
        n_limit: γ = 0 時 N 的上限
        workers: 平行行程數
        cancel_transients: 累積策略是否抵銷暫態變動

    Returns:
        每個 (μ, 負載, 策略) 一列的表格；不可行時協定與結果欄位為空
    """
    if not load_grid:
        raise ValueError("負載格點不可為空")
    if p_thresh is not None:
        scenario = scenario.model_copy(update={"p_thresh": p_thresh})
    mu_values = list(mu_grid) if mu_grid else [scenario.mu]

    rows = []
    for mu in mu_values:
        for load in load_grid:
            cell = scenario.model_copy(update={"mu": mu, "lam": load * mu * scenario.capacity})
            _, upper = search_bound(cell, n_limit=n_limit)
            periods = period_candidates(upper, period_points)
            for strategy in COMPARED_STRATEGIES:
                best, evaluated = best_by_simulation(
                    cell, strategy, periods, retry_limit, runs, seed, horizon, warmup,
                    workers=workers, cancel_transients=cancel_transients,
                )
                if best is None:
                    logger.warning(f"μ={mu:g}, 負載={load:g}, {strategy.value}: 無可行參數")
                else:
                    logger.info(
                        f"比較格點 μ={mu:g}, 負載={load:g}, {strategy.value}: "
                        f"{best.protocol.label()} ⟨V⟩={best.volume:.6g}"
                    )
                rows.append({
                    **cell.to_row(),
                    "strategy": strategy.value,
                    "N": best.protocol.full_dump_period if best else None,
                    "n_f": best.protocol.retries_full if best else None,
                    "n_d": best.protocol.retries_diff if best else None,
                    "volume": best.volume if best else None,
                    "relevance": best.relevance if best else None,
                    "relevance_ci_halfwidth": best.relevance_ci_halfwidth if best else None,
                    "feasible": best is not None,
                    "evaluated": evaluated,
                    "runs": runs,
                    "horizon": horizon,
                    "seed": seed,
                })

    return pd.DataFrame(rows)
