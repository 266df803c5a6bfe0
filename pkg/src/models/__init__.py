"""
資料模型模組

定義系統中使用的所有 Pydantic 資料模型。
"""

from .experiment import (
    ExperimentConfig,
    OutputBlock,
    ProtocolBlock,
    RunBlock,
    ScenarioBlock,
    SweepAxis,
    SweepBlock,
    TuningBlock,
)
from .params import (
    LoadPoint,
    MessageKind,
    ProtocolParams,
    ScenarioParams,
    SolveMode,
    Strategy,
    parse_element_size,
)
from .reports import AnalyticReport, RunSummary, SimulationReport

__all__ = [
    "ScenarioParams",
    "ProtocolParams",
    "LoadPoint",
    "Strategy",
    "MessageKind",
    "SolveMode",
    "parse_element_size",
    "AnalyticReport",
    "SimulationReport",
    "RunSummary",
    "ExperimentConfig",
    "ScenarioBlock",
    "ProtocolBlock",
    "RunBlock",
    "SweepBlock",
    "SweepAxis",
    "TuningBlock",
    "OutputBlock",
]
