"""
圖表資料產生

三組 CSV 資料，各自對應一張圖：
- compare：增量與累積策略在不同負載下的最佳資訊量
- validate：解析模型、漸近解與模擬在不同負載下的比較
- sensitivity：資訊量比值與 Ñ 隨 γ、M、p_err(R) 的變化

繪圖不在本模組範圍內，CSV 即為輸出契約。
"""

from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from ..analysis.analytic import AnalyticModel
from ..core.errors import ConfigError
from ..models.experiment import ExperimentConfig, SweepAxis
from ..models.params import ScenarioParams, SolveMode
from ..simulation.compare import compare_strategies
from ..simulation.engine import simulate
from ..tuning.tuner import evaluate_asymptotic_triple, tune

DEFAULT_GAMMA_GRID = tuple(float(g) for g in np.logspace(-4, -1, 10))
DEFAULT_M_VALUES = (10, 20, 50)
DEFAULT_LOSS_LEVELS = (0.01, 0.1)

COMPARE_LEAD = ["load", "mu", "strategy", "volume"]
VALIDATE_LEAD = ["load", "mu", "source", "volume", "relevance", "N", "n_f", "n_d", "feasible"]
SENSITIVITY_LEAD = [
    "gamma", "M", "p_err_level", "volume", "volume_full_dump", "volume_ratio",
    "N_tilde", "n_f", "n_d", "feasible", "gamma_critical",
]


class FigureId(str, Enum):
    """圖表代號"""
    COMPARE = "compare"
    VALIDATE = "validate"
    SENSITIVITY = "sensitivity"


def _workers(config_workers: Optional[int]) -> int:
    if config_workers is not None:
        return config_workers
    from ..utils.config import get_config
    return get_config().workers


def _ordered(rows: list[dict], lead: Sequence[str]) -> pd.DataFrame:
    frame = pd.DataFrame(rows)
    if frame.empty:
        return pd.DataFrame(columns=list(lead))
    rest = [c for c in frame.columns if c not in lead]
    return frame.reindex(columns=list(lead) + rest)


def _map_cells(func: Callable, cells: Sequence, workers: int) -> list:
    """平行執行各格點，結果依格點順序回傳"""
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(func, cells))
    return [func(cell) for cell in cells]


def _load_grid(config: ExperimentConfig) -> list[float]:
    if config.sweep is None or config.sweep.axis is not SweepAxis.LOAD:
        raise ConfigError("此圖需要負載掃描軸", field_paths=["sweep.axis", "sweep.values"])
    return list(config.sweep.values)


def _mu_grid(config: ExperimentConfig) -> list[float]:
    if config.sweep is not None and config.sweep.mu_values:
        return list(config.sweep.mu_values)
    return [config.scenario.mu]


# ===========================================
# compare
# ===========================================

def figure_compare(config: ExperimentConfig, workers: Optional[int] = None) -> pd.DataFrame:
    """
    增量與累積策略比較（以模擬評估）

    Returns:
        欄位以 (load, mu, strategy, volume) 開頭的表格
    """
    seed = config.require_seed()
    base = config.scenario.to_scenario()
    table = compare_strategies(
        base,
        load_grid=_load_grid(config),
        mu_grid=_mu_grid(config),
        runs=config.run.runs,
        seed=seed,
        horizon=config.run.horizon,
        warmup=config.run.warmup,
        retry_limit=config.tuning.compare_retry_limit,
        period_points=config.sweep.period_points,
        n_limit=config.tuning.n_limit,
        workers=_workers(workers),
        cancel_transients=config.run.cancel_transients,
    )
    return _ordered(table.to_dict(orient="records"), COMPARE_LEAD)


# ===========================================
# validate
# ===========================================

def _validate_row(scenario: ScenarioParams, source: str, result, volume, relevance) -> dict:
    protocol = result.best.to_row() if result.feasible else {"strategy": None, "N": None, "n_f": None, "n_d": None}
    return {
        **scenario.to_row(),
        "source": source,
        "volume": volume,
        "relevance": relevance,
        **protocol,
        "feasible": result.feasible,
    }


def _validate_cell(args: tuple) -> list[dict]:
    scenario, retry_limit, n_limit, run, seed, include_simulation = args
    model = AnalyticModel(scenario)
    exact = tune(scenario, mode=SolveMode.EXACT, retry_limit=retry_limit, n_limit=n_limit, model=model)
    asym, asym_exact = evaluate_asymptotic_triple(scenario, retry_limit=retry_limit, n_limit=n_limit, model=model)

    rows = [
        _validate_row(scenario, "analytic", exact, exact.best_volume, exact.best_relevance),
        _validate_row(scenario, "asymptotic", asym, asym.best_volume, asym.best_relevance),
        _validate_row(
            scenario, "asymptotic_exact", asym,
            asym_exact.avg_v if asym_exact else None,
            asym_exact.p_rel_all if asym_exact else None,
        ),
    ]
    if include_simulation:
        if exact.feasible:
            report = simulate(
                scenario, exact.best,
                horizon=run.horizon, warmup=run.warmup, runs=run.runs, seed=seed, workers=1,
            )
            rows.append(_validate_row(scenario, "simulation", exact, report.mean_volume, report.mean_relevance))
        else:
            rows.append(_validate_row(scenario, "simulation", exact, None, None))
    return rows


def figure_validate(
    config: ExperimentConfig,
    include_simulation: bool = True,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """
    解析模型驗證

    每個 (μ, 負載) 產生 analytic（N*）、asymptotic（Ñ，漸近公式）、
    asymptotic_exact（Ñ 以完整模型評估）與 simulation（N* 的模擬）四列。
    """
    seed = config.require_seed() if include_simulation else (config.run.seed or 0)
    cells = [
        (
            config.scenario.to_scenario(load=load, mu=mu),
            config.tuning.retry_limit,
            config.tuning.n_limit,
            config.run,
            seed,
            include_simulation,
        )
        for mu in _mu_grid(config)
        for load in _load_grid(config)
    ]
    rows = [row for cell_rows in _map_cells(_validate_cell, cells, _workers(workers)) for row in cell_rows]
    return _ordered(rows, VALIDATE_LEAD)


# ===========================================
# sensitivity
# ===========================================

def _sensitivity_cell(args: tuple) -> dict:
    scenario, level, mode, retry_limit, n_limit = args
    tuned = tune(scenario, mode=mode, retry_limit=retry_limit, n_limit=n_limit)
    baseline = tune(scenario, mode=mode, retry_limit=retry_limit, n_limit=n_limit, max_period=1)

    ratio = None
    if tuned.feasible and baseline.feasible and baseline.best_volume > 0:
        ratio = tuned.best_volume / baseline.best_volume
    if not tuned.feasible:
        logger.warning(f"γ={scenario.gamma:g}, M={scenario.n_neighbors}, p_err(R)={level:g}: 無可行參數")

    return {
        **scenario.to_row(),
        "p_err_level": level,
        "volume": tuned.best_volume,
        "volume_full_dump": baseline.best_volume,
        "volume_ratio": ratio,
        "N_tilde": tuned.best.full_dump_period if tuned.feasible else None,
        "n_f": tuned.best.retries_full if tuned.feasible else None,
        "n_d": tuned.best.retries_diff if tuned.feasible else None,
        "feasible": tuned.feasible,
        "mode": SolveMode(mode).value,
    }


def gamma_critical(rows: Iterable[dict]) -> Optional[float]:
    """可行調校的最大 γ；全部不可行時為 None"""
    feasible = [row["gamma"] for row in rows if row["feasible"]]
    return max(feasible) if feasible else None


def figure_sensitivity(
    config: ExperimentConfig,
    mode: Optional[SolveMode] = None,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """
    參數敏感度

    對每個 (M, p_err(R), γ) 調校，並以 N = 1 的最佳解為完整傾印基準。
    每個 (M, p_err(R)) 另外標出 γ_critical。
    """
    sweep = config.sweep
    if sweep is not None and sweep.axis is SweepAxis.GAMMA:
        gammas = list(sweep.values)
    else:
        gammas = list(DEFAULT_GAMMA_GRID)
    m_values = list(sweep.m_values) if sweep is not None and sweep.m_values else list(DEFAULT_M_VALUES)
    if sweep is not None and sweep.loss_levels:
        levels = list(sweep.loss_levels)
    elif config.scenario.p_err_level is not None:
        levels = [config.scenario.p_err_level]
    else:
        levels = list(DEFAULT_LOSS_LEVELS)
    mode = SolveMode(mode or config.protocol.mode)

    cells = [
        (
            config.scenario.to_scenario(gamma=gamma, neighbors=m, p_err_level=level),
            level,
            mode,
            config.tuning.retry_limit,
            config.tuning.n_limit,
        )
        for m in m_values
        for level in levels
        for gamma in gammas
    ]
    rows = _map_cells(_sensitivity_cell, cells, _workers(workers))

    for m in m_values:
        for level in levels:
            group = [row for row in rows if row["M"] == m and row["p_err_level"] == level]
            critical = gamma_critical(group)
            for row in group:
                row["gamma_critical"] = critical
            logger.info(f"M={m}, p_err(R)={level:g}: γ_critical = {critical if critical is not None else '無'}")

    return _ordered(rows, SENSITIVITY_LEAD)


FIGURES: dict[FigureId, Callable[..., pd.DataFrame]] = {
    FigureId.COMPARE: figure_compare,
    FigureId.VALIDATE: figure_validate,
    FigureId.SENSITIVITY: figure_sensitivity,
}


def build_figure(figure_id: FigureId, config: ExperimentConfig, workers: Optional[int] = None) -> pd.DataFrame:
    """依圖表代號產生資料"""
    figure_id = FigureId(figure_id)
    logger.info(f"產生圖表資料: {figure_id.value}")
    return FIGURES[figure_id](config, workers=workers)
