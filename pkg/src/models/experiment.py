"""
實驗設定模型

YAML 實驗檔經 load_config 讀入後驗證為 ExperimentConfig。
命令列旗標在載入後覆寫設定（旗標優先）。
"""

from enum import Enum
from pathlib import Path
from typing import Any, Iterator, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..core.errors import ConfigError
from ..core.probability import ber_for_loss
from .params import ProtocolParams, ScenarioParams, SolveMode, Strategy, parse_element_size


# ===========================================
# 情境區塊
# ===========================================

class ScenarioBlock(BaseModel):
    """
    情境設定

    到達率可用 lambda 或 load（λ/(μR)）其中之一指定；
    鄰居 BER 可直接給定，或以 p_err_level（含 R 個元素訊息的遺失機率）反推。
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    lam: Optional[float] = Field(None, ge=0, alias="lambda", description="每時槽平均新增元素數")
    load: Optional[float] = Field(None, gt=0, description="負載 λ/(μR)")
    mu: float = Field(..., gt=0, description="元素平均壽命的倒數")
    capacity: int = Field(..., ge=1, description="容量 R")
    element_size: int = Field(..., ge=1, description="元素大小（位元）")
    gamma: float = Field(0.0, ge=0, description="連線期平均長度的倒數")
    neighbors: Optional[int] = Field(None, ge=1, alias="M", description="鄰居數 M")
    ber: Optional[Union[float, list[float]]] = Field(None, description="位元錯誤率（單一值或每位鄰居一個）")
    p_err_level: Optional[float] = Field(None, ge=0, lt=1, description="p_err(R) 目標值")
    p_thresh: float = Field(0.95, gt=0, lt=1, description="相關性門檻")

    @field_validator("element_size", mode="before")
    @classmethod
    def _parse_element_size(cls, value: Any) -> int:
        return parse_element_size(value)

    @field_validator("ber")
    @classmethod
    def _ber_range(cls, value: Optional[Union[float, list[float]]]) -> Optional[Union[float, list[float]]]:
        values = value if isinstance(value, list) else [value]
        if any(v is not None and not (0.0 <= v < 1.0) for v in values):
            raise ValueError(f"BER 必須落在 [0, 1)，收到 {value}")
        return value

    @model_validator(mode="after")
    def _check_exclusive(self) -> "ScenarioBlock":
        if (self.lam is None) == (self.load is None):
            raise ValueError("lambda 與 load 必須恰好指定其中一個")
        if self.ber is not None and self.p_err_level is not None:
            raise ValueError("ber 與 p_err_level 不可同時指定")
        if isinstance(self.ber, list):
            if not self.ber:
                raise ValueError("ber 列表不可為空")
            if self.neighbors is not None and len(self.ber) not in (1, self.neighbors):
                raise ValueError(f"ber 列表長度 {len(self.ber)} 與 M={self.neighbors} 不符")
        return self

    def base_ber(self) -> float:
        """代表性的單一 BER（掃描 M 時使用）"""
        if self.p_err_level is not None:
            return ber_for_loss(self.p_err_level, self.capacity, self.element_size)
        if self.ber is None:
            return 0.0
        if isinstance(self.ber, list):
            return self.ber[0]
        return self.ber

    def neighbor_bers(self, count: Optional[int] = None) -> tuple[float, ...]:
        """展開為每位鄰居的 BER"""
        if isinstance(self.ber, list) and len(self.ber) > 1 and count is None:
            return tuple(self.ber)
        m = count or self.neighbors or (len(self.ber) if isinstance(self.ber, list) else 1)
        return (self.base_ber(),) * m

    def to_scenario(
        self,
        load: Optional[float] = None,
        mu: Optional[float] = None,
        gamma: Optional[float] = None,
        ber: Optional[float] = None,
        neighbors: Optional[int] = None,
        p_err_level: Optional[float] = None,
    ) -> ScenarioParams:
        """
        建立 ScenarioParams，可覆寫單一掃描軸

        Args:
            load: 覆寫負載
            mu: 覆寫 μ（未覆寫負載時 λ 依原負載換算）
            gamma: 覆寫 γ
            ber: 覆寫所有鄰居的 BER
            neighbors: 覆寫鄰居數
            p_err_level: 以 p_err(R) 覆寫 BER

        Returns:
            ScenarioParams
        """
        mu_value = self.mu if mu is None else mu
        if load is not None:
            lam = load * mu_value * self.capacity
        elif self.load is not None:
            lam = self.load * mu_value * self.capacity
        else:
            lam = self.lam

        if p_err_level is not None:
            ber = ber_for_loss(p_err_level, self.capacity, self.element_size)
        if ber is not None:
            bers = (ber,) * (neighbors or self.neighbors or len(self.neighbor_bers()))
        else:
            bers = self.neighbor_bers(neighbors)

        try:
            return ScenarioParams(
                lam=lam,
                mu=mu_value,
                capacity=self.capacity,
                element_size=self.element_size,
                gamma=self.gamma if gamma is None else gamma,
                neighbors=bers,
                p_thresh=self.p_thresh,
            )
        except ValidationError as e:
            raise _block_error("情境參數不合法", "scenario", e) from e


# ===========================================
# 協定 / 執行 / 掃描 / 調校 / 輸出區塊
# ===========================================

class ProtocolBlock(BaseModel):
    """協定設定（未給完整三元組時由調校器決定）"""
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    strategy: Strategy = Field(Strategy.INCREMENTAL)
    mode: SolveMode = Field(SolveMode.EXACT)
    full_dump_period: Optional[int] = Field(None, ge=1, alias="N")
    retries_full: Optional[int] = Field(None, ge=1, alias="n_f")
    retries_diff: Optional[int] = Field(None, ge=1, alias="n_d")

    @model_validator(mode="after")
    def _check_full_dump_period(self) -> "ProtocolBlock":
        if self.strategy is Strategy.FULL_DUMP and self.full_dump_period not in (None, 1):
            raise ValueError(f"完整傾印策略的 N 固定為 1，收到 N={self.full_dump_period}")
        return self

    @property
    def has_triple(self) -> bool:
        """是否給定完整的 (N, n_f, n_d)"""
        if self.strategy is Strategy.FULL_DUMP:
            return self.retries_full is not None
        return None not in (self.full_dump_period, self.retries_full, self.retries_diff)

    def to_protocol(self) -> ProtocolParams:
        """轉為 ProtocolParams（需先確認 has_triple）"""
        if not self.has_triple:
            raise ConfigError("協定未指定完整的 (N, n_f, n_d)", field_paths=["protocol.N", "protocol.n_f", "protocol.n_d"])
        if self.strategy is Strategy.FULL_DUMP:
            return ProtocolParams.full_dump_only(self.retries_full)
        try:
            return ProtocolParams(
                strategy=self.strategy,
                full_dump_period=self.full_dump_period,
                retries_full=self.retries_full,
                retries_diff=self.retries_diff,
            )
        except ValidationError as e:
            raise _block_error("協定參數不合法", "protocol", e) from e


class RunBlock(BaseModel):
    """模擬執行設定"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    horizon: int = Field(1_000_000, ge=1, description="每次執行的時槽數")
    warmup: Optional[int] = Field(None, ge=0, description="暖機時槽數，預設 10/μ")
    runs: int = Field(20, ge=1, description="獨立執行次數")
    seed: Optional[int] = Field(None, ge=0, description="亂數種子")
    cancel_transients: bool = Field(True, description="累積策略是否抵銷同週期內的新增再刪除")
    trace: Optional[str] = Field(None, description="第 0 次執行的逐時槽追蹤 CSV 路徑")

    @model_validator(mode="after")
    def _check_warmup(self) -> "RunBlock":
        if self.warmup is not None and self.warmup >= self.horizon:
            raise ValueError(f"warmup ({self.warmup}) 必須小於 horizon ({self.horizon})")
        return self


class SweepAxis(str, Enum):
    """掃描軸"""
    LOAD = "load"
    GAMMA = "gamma"
    BER = "ber"
    M = "M"


class SweepBlock(BaseModel):
    """參數掃描設定"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    axis: SweepAxis = Field(SweepAxis.LOAD)
    values: list[float] = Field(..., min_length=1, description="掃描軸格點（嚴格遞增）")
    mu_values: Optional[list[float]] = Field(None, description="額外的 μ 格點")
    m_values: Optional[list[int]] = Field(None, description="敏感度分析的鄰居數格點")
    loss_levels: Optional[list[float]] = Field(None, description="敏感度分析的 p_err(R) 格點")
    period_points: int = Field(12, ge=1, description="策略比較時的 N 候選數")

    @field_validator("values", "mu_values", "m_values", "loss_levels")
    @classmethod
    def _strictly_increasing(cls, value: Optional[list]) -> Optional[list]:
        if value is None:
            return value
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"格點必須嚴格遞增，收到 {value}")
        return value

    @field_validator("mu_values")
    @classmethod
    def _positive_mu(cls, value: Optional[list[float]]) -> Optional[list[float]]:
        if value is not None and any(v <= 0 for v in value):
            raise ValueError("μ 格點必須為正數")
        return value

    @field_validator("loss_levels")
    @classmethod
    def _loss_levels_range(cls, value: Optional[list[float]]) -> Optional[list[float]]:
        if value is not None and any(not (0.0 <= v < 1.0) for v in value):
            raise ValueError("p_err(R) 格點必須落在 [0, 1)")
        return value

    @model_validator(mode="after")
    def _check_axis_values(self) -> "SweepBlock":
        if self.axis is SweepAxis.M and any(v < 1 or not float(v).is_integer() for v in self.values):
            raise ValueError("M 軸的格點必須為正整數")
        if self.axis is SweepAxis.BER and any(not (0.0 <= v < 1.0) for v in self.values):
            raise ValueError("BER 軸的格點必須落在 [0, 1)")
        if self.axis in (SweepAxis.LOAD, SweepAxis.GAMMA) and any(v < 0 for v in self.values):
            raise ValueError(f"{self.axis.value} 軸的格點不可為負數")
        return self


class TuningBlock(BaseModel):
    """調校器設定"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    retry_limit: int = Field(7, ge=1, description="n_f、n_d 的搜尋上限")
    n_limit: int = Field(1000, ge=1, description="γ = 0 時 N 的搜尋上限")
    compare_retry_limit: int = Field(3, ge=1, description="策略比較時以模擬評估的重傳上限")
    trace: Optional[str] = Field(None, description="搜尋軌跡 CSV 路徑")


class OutputBlock(BaseModel):
    """輸出設定"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    csv: Optional[str] = Field(None, description="CSV 輸出路徑，未指定時寫到標準輸出")
    precision: int = Field(12, ge=1, le=17, description="有效位數")
    per_run: bool = Field(True, description="模擬結果是否附上每次執行的列")


# ===========================================
# 實驗設定
# ===========================================

def _field_paths(error: ValidationError) -> list[str]:
    return [".".join(str(part) for part in item["loc"]) or "<root>" for item in error.errors()]


def _block_error(message: str, block: str, error: ValidationError) -> ConfigError:
    """把參數模型的驗證錯誤轉為帶區塊前綴欄位路徑的 ConfigError"""
    paths = [f"{block}.{path}" for path in _field_paths(error)]
    return ConfigError(f"{message} ({error.error_count()} 項錯誤)", field_paths=paths)


class ExperimentConfig(BaseModel):
    """單一 YAML 實驗檔的完整內容"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: ScenarioBlock
    protocol: ProtocolBlock = Field(default_factory=ProtocolBlock)
    run: RunBlock = Field(default_factory=RunBlock)
    sweep: Optional[SweepBlock] = None
    tuning: TuningBlock = Field(default_factory=TuningBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """
        由字典建立設定

        Raises:
            ConfigError: 驗證失敗，附欄位路徑
        """
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            details = "; ".join(f"{'.'.join(map(str, item['loc']))}: {item['msg']}" for item in e.errors())
            raise ConfigError(f"實驗設定不合法 ({details})", field_paths=_field_paths(e)) from e

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """
        讀取 YAML 實驗檔

        Raises:
            ConfigError: 檔案不存在、格式錯誤或驗證失敗
        """
        from ..utils.config import load_config

        try:
            data = load_config(str(path))
        except FileNotFoundError as e:
            raise ConfigError(str(e), field_paths=["--config"]) from e
        except yaml.YAMLError as e:
            raise ConfigError(f"YAML 格式錯誤: {e}", field_paths=["--config"]) from e
        if not isinstance(data, dict):
            raise ConfigError("實驗檔最外層必須為對應表", field_paths=["<root>"])
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        """序列化為可寫回 YAML 的字典"""
        return self.model_dump(mode="json", by_alias=True, exclude_none=True)

    def to_yaml(self) -> str:
        """序列化為 YAML 字串（再讀入後與原設定相同）"""
        return yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        out: Optional[str] = None,
        mode: Optional[SolveMode] = None,
        strategy: Optional[Strategy] = None,
    ) -> "ExperimentConfig":
        """
        套用命令列旗標（旗標優先）

        Returns:
            新的 ExperimentConfig
        """
        data = self.to_dict()
        if seed is not None:
            data["run"]["seed"] = seed
        if out is not None:
            data["output"]["csv"] = out
        if mode is not None:
            data["protocol"]["mode"] = SolveMode(mode).value
        if strategy is not None:
            data["protocol"]["strategy"] = Strategy(strategy).value
        return ExperimentConfig.from_dict(data)

    def require_seed(self) -> int:
        """模擬指令必須提供種子"""
        if self.run.seed is None:
            raise ConfigError("模擬需要亂數種子，請在 run.seed 或 --seed 指定", field_paths=["run.seed"])
        return self.run.seed

    def scenario_points(self) -> Iterator[tuple[Optional[float], ScenarioParams]]:
        """
        依掃描軸展開情境

        Yields:
            (軸值, ScenarioParams)；無掃描區塊時軸值為 None
        """
        if self.sweep is None:
            yield None, self.scenario.to_scenario()
            return

        axis = self.sweep.axis
        for value in self.sweep.values:
            if axis is SweepAxis.LOAD:
                yield value, self.scenario.to_scenario(load=value)
            elif axis is SweepAxis.GAMMA:
                yield value, self.scenario.to_scenario(gamma=value)
            elif axis is SweepAxis.BER:
                yield value, self.scenario.to_scenario(ber=value)
            else:
                yield value, self.scenario.to_scenario(neighbors=int(value))
