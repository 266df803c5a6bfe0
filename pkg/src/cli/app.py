"""
命令列介面

子命令：analyze、tune、simulate、figures、cache。
結束碼：0 成功、2 設定錯誤、3 無可行參數。
CSV 寫到 --out 或標準輸出，日誌與摘要寫到標準錯誤。
"""

from pathlib import Path
from typing import Optional

import pandas as pd
import typer
from loguru import logger
from rich.console import Console
from rich.table import Table

from ..core.errors import ConfigError, ModelDomainError
from ..experiments.figures import FigureId
from ..models.experiment import ExperimentConfig
from ..models.params import SolveMode, Strategy
from ..utils.cache import StationaryCache, get_cache
from ..utils.config import get_config
from ..utils.export import ReportExporter
from ..utils.logging import setup_logging
from . import commands

EXIT_CONFIG_ERROR = 2
EXIT_INFEASIBLE = 3

app = typer.Typer(
    help="控制資訊散播的解析模型、參數調校與模擬",
    add_completion=False,
    no_args_is_help=True,
)
console = Console(stderr=True)

ConfigOption = typer.Option(..., "--config", "-c", help="YAML 實驗檔", exists=False)
SeedOption = typer.Option(None, "--seed", help="亂數種子（覆寫 run.seed）")
OutOption = typer.Option(None, "--out", "-o", help="CSV 輸出路徑（覆寫 output.csv）")
ModeOption = typer.Option(None, "--mode", help="exact 或 asymptotic")
StrategyOption = typer.Option(None, "--strategy", help="full、incremental 或 cumulative")
NoCacheOption = typer.Option(False, "--no-cache", help="不使用穩態分佈磁碟快取")


@app.callback()
def _setup() -> None:
    settings = get_config()
    invalid = settings.validate()
    setup_logging(
        log_level=settings.log_level if "LOG_LEVEL" not in invalid else "INFO",
        log_file=settings.log_file,
        diagnose=settings.is_development,
    )
    for name in invalid:
        logger.warning(f"環境變數 {name} 不合法，已使用預設值")


def _load(
    config: Path,
    seed: Optional[int] = None,
    out: Optional[Path] = None,
    mode: Optional[SolveMode] = None,
    strategy: Optional[Strategy] = None,
) -> ExperimentConfig:
    loaded = ExperimentConfig.from_yaml(config)
    return loaded.with_overrides(
        seed=seed,
        out=str(out) if out is not None else None,
        mode=mode,
        strategy=strategy,
    )


def _fail(error: Exception) -> None:
    console.print(f"[red]設定錯誤:[/red] {error}")
    raise typer.Exit(code=EXIT_CONFIG_ERROR)


def _emit(frame: pd.DataFrame, experiment: ExperimentConfig) -> None:
    exporter = ReportExporter(frame, precision=experiment.output.precision)
    path = experiment.output.csv
    text = exporter.to_csv(path)
    if path is None:
        typer.echo(text, nl=False)
    else:
        logger.info(f"結果已寫入 {path}（{len(frame)} 列）")


def _cache(no_cache: bool) -> Optional[StationaryCache]:
    return None if no_cache else get_cache()


@app.command()
def analyze(
    config: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    mode: Optional[SolveMode] = ModeOption,
    strategy: Optional[Strategy] = StrategyOption,
    no_cache: bool = NoCacheOption,
    pi_csv: Optional[Path] = typer.Option(None, "--pi-csv", help="第 0 個掃描點的穩態分佈 CSV（r, pi_r）"),
) -> None:
    """解析評估（未指定三元組時先調校）"""
    try:
        experiment = _load(config, out=out, mode=mode, strategy=strategy)
        logger.info(f"analyze: {config}")
        frame = commands.cmd_analyze(
            experiment,
            cache=_cache(no_cache),
            pi_csv=str(pi_csv) if pi_csv is not None else None,
        )
    except (ConfigError, ModelDomainError) as e:
        _fail(e)
    _emit(frame, experiment)


@app.command()
def tune(
    config: Path = ConfigOption,
    out: Optional[Path] = OutOption,
    mode: Optional[SolveMode] = ModeOption,
    strategy: Optional[Strategy] = StrategyOption,
    no_cache: bool = NoCacheOption,
) -> None:
    """窮舉搜尋最佳 (N, n_f, n_d)"""
    try:
        experiment = _load(config, out=out, mode=mode, strategy=strategy)
        logger.info(f"tune: {config}")
        frame, results = commands.cmd_tune(experiment, cache=_cache(no_cache))
    except (ConfigError, ModelDomainError) as e:
        _fail(e)

    table = Table(title=f"調校結果（{experiment.protocol.mode.value}）")
    for column in ("N_max", "N", "n_f", "n_d", "⟨V⟩", "p_rel_all", "可行"):
        table.add_column(column)
    for result in results:
        if result.feasible:
            best = result.best
            table.add_row(
                str(result.n_max), str(best.full_dump_period), str(best.retries_full),
                str(best.retries_diff), f"{result.best_volume:.6g}", f"{result.best_relevance:.6g}", "是",
            )
        else:
            table.add_row(str(result.n_max), "-", "-", "-", "-", "-", "否")
    console.print(table)

    _emit(frame, experiment)
    if not all(result.feasible for result in results):
        console.print("[yellow]infeasible:[/yellow] 搜尋範圍內沒有滿足 p_rel_all ≥ p_thresh 的參數")
        raise typer.Exit(code=EXIT_INFEASIBLE)


@app.command()
def simulate(
    config: Path = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    mode: Optional[SolveMode] = ModeOption,
    strategy: Optional[Strategy] = StrategyOption,
    no_cache: bool = NoCacheOption,
) -> None:
    """模擬（輸出彙總列與每次執行的列）"""
    try:
        experiment = _load(config, seed=seed, out=out, mode=mode, strategy=strategy)
        logger.info(f"simulate: {config}")
        frame = commands.cmd_simulate(experiment, cache=_cache(no_cache))
    except (ConfigError, ModelDomainError) as e:
        _fail(e)
    _emit(frame, experiment)


@app.command()
def figures(
    figure_id: FigureId = typer.Argument(..., help="compare、validate 或 sensitivity"),
    config: Path = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    mode: Optional[SolveMode] = ModeOption,
    save: bool = typer.Option(False, "--save", help="未指定 --out 時寫到 DISSEMINATION_OUTPUT_DIR/<圖表代號>.csv"),
) -> None:
    """產生圖表用的 CSV 資料"""
    if save and out is None:
        out = Path(get_config().output_dir) / f"{figure_id.value}.csv"
    try:
        experiment = _load(config, seed=seed, out=out, mode=mode)
        logger.info(f"figures {figure_id.value}: {config}")
        frame = commands.cmd_figures(figure_id, experiment)
    except (ConfigError, ModelDomainError) as e:
        _fail(e)
    _emit(frame, experiment)


@app.command()
def cache(
    clear: bool = typer.Option(False, "--clear", help="清空穩態分佈快取"),
) -> None:
    """檢視或清空穩態分佈快取"""
    store = get_cache()
    if clear:
        count = store.clear_all()
        console.print(f"已刪除 {count} 筆快取")
        return

    table = Table(title=f"穩態分佈快取（{store.cache_dir}）")
    for column in ("id", "λ", "μ", "R", "時間"):
        table.add_column(column)
    for item in store.list_all():
        table.add_row(item["id"], f"{item['lambda']:.6g}", f"{item['mu']:.6g}", str(item["capacity"]), str(item["timestamp"]))
    console.print(table)
    stats = store.get_stats()
    console.print(f"共 {stats['total_count']} 筆，{stats['total_size_kb']} KB")
