"""
命令實作

每個命令接收驗證過的 ExperimentConfig，回傳 pandas DataFrame（CSV 契約），
不處理輸出與結束碼；這些由 app.py 負責。
"""

from pathlib import Path
from typing import Optional

import pandas as pd
from loguru import logger

from ..analysis.analytic import AnalyticModel
from ..analysis.asymptotic import asymptotic_report
from ..core.errors import ConfigError
from ..experiments.figures import FigureId, build_figure
from ..models.experiment import ExperimentConfig
from ..models.params import ProtocolParams, ScenarioParams, SolveMode, Strategy
from ..simulation.engine import simulate
from ..tuning.tuner import TuningResult, tune
from ..utils.cache import StationaryCache


def _resolve_protocol(
    config: ExperimentConfig,
    scenario: ScenarioParams,
    cache: Optional[StationaryCache],
) -> tuple[Optional[ProtocolParams], Optional[TuningResult]]:
    """取得設定中的三元組，未給定時先調校"""
    block = config.protocol
    if block.has_triple:
        return block.to_protocol(), None
    if block.strategy is Strategy.CUMULATIVE:
        raise ConfigError(
            "累積策略沒有解析模型可供調校，請指定完整的 (N, n_f, n_d)",
            field_paths=["protocol.N", "protocol.n_f", "protocol.n_d"],
        )
    result = tune(
        scenario,
        mode=block.mode,
        retry_limit=config.tuning.retry_limit,
        n_limit=config.tuning.n_limit,
        max_period=1 if block.strategy is Strategy.FULL_DUMP else None,
        cache=cache,
    )
    return result.best, result


def cmd_analyze(
    config: ExperimentConfig,
    cache: Optional[StationaryCache] = None,
    pi_csv: Optional[str] = None,
) -> pd.DataFrame:
    """
    解析評估：每個掃描點一列

    Args:
        config: 實驗設定
        cache: 穩態分佈快取
        pi_csv: 第 0 個掃描點的穩態分佈除錯輸出路徑（僅 exact 模式）

    Raises:
        ConfigError: 累積策略（沒有封閉解），或在 asymptotic 模式要求輸出穩態分佈
    """
    if config.protocol.strategy is Strategy.CUMULATIVE:
        raise ConfigError("累積策略沒有封閉解，請改用 simulate", field_paths=["protocol.strategy"])
    if pi_csv is not None and config.protocol.mode is SolveMode.ASYMPTOTIC:
        raise ConfigError("asymptotic 模式不求穩態分佈，無法輸出 π", field_paths=["--pi-csv"])

    rows = []
    for index, (_, scenario) in enumerate(config.scenario_points()):
        if index == 0 and pi_csv is not None:
            out = AnalyticModel(scenario, cache=cache).distribution.to_csv(pi_csv)
            logger.info(f"穩態分佈已寫入 {out}")
        protocol, _ = _resolve_protocol(config, scenario, cache)
        if protocol is None:
            logger.warning(f"情境 {scenario.scenario_hash()} 無可行參數，輸出空白列")
            rows.append({"mode": config.protocol.mode.value, **scenario.to_row(), "meets_threshold": False})
            continue

        if config.protocol.mode is SolveMode.ASYMPTOTIC:
            report = asymptotic_report(scenario, protocol)
        else:
            report = AnalyticModel(scenario, cache=cache).evaluate(protocol)
        rows.append({**report.to_row(), "meets_threshold": report.p_rel_all >= scenario.p_thresh})
    return pd.DataFrame(rows)


def cmd_tune(
    config: ExperimentConfig,
    cache: Optional[StationaryCache] = None,
) -> tuple[pd.DataFrame, list[TuningResult]]:
    """
    參數調校：每個掃描點一列，可選擇寫出搜尋軌跡

    Returns:
        (結果表格, 各點的 TuningResult)

    Raises:
        ConfigError: 累積策略（調校器只有增量與完整傾印的解析模型）
    """
    if config.protocol.strategy is Strategy.CUMULATIVE:
        raise ConfigError(
            "累積策略沒有解析模型可供調校，請改用 figures compare 以模擬比較",
            field_paths=["protocol.strategy"],
        )
    keep_trace = config.tuning.trace is not None
    results = []
    for _, scenario in config.scenario_points():
        results.append(tune(
            scenario,
            mode=config.protocol.mode,
            retry_limit=config.tuning.retry_limit,
            n_limit=config.tuning.n_limit,
            max_period=1 if config.protocol.strategy is Strategy.FULL_DUMP else None,
            keep_trace=keep_trace,
            cache=cache,
        ))

    if keep_trace:
        traces = [
            result.trace.assign(scenario_hash=result.scenario.scenario_hash())
            for result in results
            if result.trace is not None
        ]
        trace = pd.concat(traces, ignore_index=True) if traces else pd.DataFrame()
        out = Path(config.tuning.trace)
        out.parent.mkdir(parents=True, exist_ok=True)
        trace.to_csv(out, index=False, float_format=f"%.{config.output.precision}g")
        logger.info(f"搜尋軌跡已寫入 {out}")

    return pd.DataFrame([result.to_row() for result in results]), results


def cmd_simulate(config: ExperimentConfig, cache: Optional[StationaryCache] = None) -> pd.DataFrame:
    """
    模擬：每個掃描點一列彙總，另附每次執行的列

    Raises:
        ConfigError: 缺少種子，或累積策略未指定三元組
    """
    seed = config.require_seed()
    rows = []
    for index, (_, scenario) in enumerate(config.scenario_points()):
        protocol, _ = _resolve_protocol(config, scenario, cache)
        if protocol is None:
            logger.warning(f"情境 {scenario.scenario_hash()} 無可行參數，略過模擬")
            rows.append({**scenario.to_row(), "run": "aggregate"})
            continue

        trace = config.run.trace if index == 0 else None
        report = simulate(
            scenario,
            protocol,
            horizon=config.run.horizon,
            warmup=config.run.warmup,
            runs=config.run.runs,
            seed=seed,
            trace_path=trace,
            cancel_transients=config.run.cancel_transients,
        )
        rows.append(report.to_row())
        if config.output.per_run:
            rows.extend(report.per_run_rows())
    return pd.DataFrame(rows)


def cmd_figures(figure_id: FigureId, config: ExperimentConfig) -> pd.DataFrame:
    """產生指定圖表的 CSV 資料"""
    return build_figure(FigureId(figure_id), config)
