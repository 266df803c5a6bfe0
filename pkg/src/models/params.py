"""
情境與協定參數模型

定義描述網路環境（ScenarioParams）、散播協定（ProtocolParams）
與負載點（LoadPoint）的 Pydantic 資料模型。
"""

import hashlib
import json
import re
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.probability import deletion_prob

# 1/μ 低於此值時，「元素壽命遠大於一個時槽」的假設視為不成立
MIN_LIFETIME_SLOTS = 10.0

_SIZE_PATTERN = re.compile(r"^\s*(\d+)\s*(bits?|b|bytes?|B)?\s*$")


# ===========================================
# 列舉類型定義
# ===========================================

class Strategy(str, Enum):
    """差分更新策略"""
    FULL_DUMP = "full"             # 每個時槽都送完整傾印（N = 1）
    INCREMENTAL = "incremental"    # 只送上一則訊息之後的變動
    CUMULATIVE = "cumulative"      # 送上次完整傾印之後的全部變動


class MessageKind(str, Enum):
    """控制訊息類型"""
    FULL_DUMP = "full_dump"
    DIFFERENTIAL = "differential"


class SolveMode(str, Enum):
    """解析模式"""
    EXACT = "exact"                # 完整馬可夫鏈模型
    ASYMPTOTIC = "asymptotic"      # λ → ∞ 的封閉解


def parse_element_size(value: Any) -> int:
    """
    解析元素大小並換算為位元

    支援 16、"16"、"16 bits"、"16b"、"2 bytes"、"2B"。

    Args:
        value: 設定檔中的原始值

    Returns:
        元素大小（位元）
    """
    if isinstance(value, bool):
        raise ValueError("元素大小不可為布林值")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)

    match = _SIZE_PATTERN.match(str(value))
    if not match:
        raise ValueError(f"無法解析元素大小: {value!r}（請使用 '16 bits' 或 '2 bytes'）")

    amount = int(match.group(1))
    unit = match.group(2) or "bits"
    if unit in ("B", "byte", "bytes"):
        return amount * 8
    return amount


# ===========================================
# 情境參數
# ===========================================

class ScenarioParams(BaseModel):
    """節點 A 與其 M 個鄰居的環境描述"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(..., ge=0, alias="lambda", description="每時槽平均新增元素數 λ")
    mu: float = Field(..., gt=0, description="元素平均壽命的倒數 μ（1/時槽）")
    capacity: int = Field(..., ge=1, description="最多追蹤的元素數 R")
    element_size: int = Field(..., ge=1, description="單一元素大小 V₀（位元）")
    gamma: float = Field(0.0, ge=0, description="連線期平均長度的倒數 γ（1/時槽）")
    neighbors: tuple[float, ...] = Field(..., min_length=1, description="各鄰居的位元錯誤率")
    p_thresh: float = Field(0.95, gt=0, lt=1, description="要求的資訊相關性機率")

    @field_validator("element_size", mode="before")
    @classmethod
    def _parse_element_size(cls, value: Any) -> int:
        return parse_element_size(value)

    @field_validator("neighbors", mode="before")
    @classmethod
    def _coerce_neighbors(cls, value: Any) -> Any:
        if isinstance(value, (int, float)):
            return (value,)
        return value

    @field_validator("neighbors")
    @classmethod
    def _check_ber(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        for i, ber in enumerate(value):
            if not (0.0 <= ber < 1.0):
                raise ValueError(f"鄰居 {i} 的位元錯誤率必須落在 [0, 1)，收到 {ber}")
        return value

    @classmethod
    def from_load(cls, load: float, mu: float, capacity: int, **kwargs: Any) -> "ScenarioParams":
        """以負載 λ/(μR) 指定到達率建立情境"""
        return cls(lam=load * mu * capacity, mu=mu, capacity=capacity, **kwargs)

    @property
    def n_neighbors(self) -> int:
        """鄰居數 M"""
        return len(self.neighbors)

    @property
    def load(self) -> float:
        """負載 λ/(μR)"""
        return self.lam / (self.mu * self.capacity)

    @property
    def p_tilde(self) -> float:
        """單一元素在一個時槽內被刪除的機率"""
        return deletion_prob(self.mu)

    def with_load(self, load: float) -> "ScenarioParams":
        """回傳改變負載後的情境"""
        return self.model_copy(update={"lam": load * self.mu * self.capacity})

    def with_neighbors(self, neighbors: tuple[float, ...]) -> "ScenarioParams":
        """回傳更換鄰居 BER 後的情境"""
        return ScenarioParams.model_validate({**self.model_dump(), "neighbors": tuple(neighbors)})

    def model_warnings(self) -> list[str]:
        """模型適用性診斷（非致命）"""
        warnings = []
        if 1.0 / self.mu < MIN_LIFETIME_SLOTS:
            warnings.append(
                f"元素平均壽命 1/μ = {1.0 / self.mu:.3g} 時槽，低於 {MIN_LIFETIME_SLOTS:g}，"
                "壽命遠大於時槽的假設可能不成立"
            )
        return warnings

    def scenario_hash(self) -> str:
        """情境的 16 位十六進位雜湊值"""
        payload = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def to_row(self) -> dict:
        """CSV 列使用的參數欄位"""
        return {
            "scenario_hash": self.scenario_hash(),
            "lambda": self.lam,
            "mu": self.mu,
            "capacity": self.capacity,
            "element_size_bits": self.element_size,
            "gamma": self.gamma,
            "M": self.n_neighbors,
            "ber": ";".join(f"{b:.12g}" for b in self.neighbors),
            "p_thresh": self.p_thresh,
            "load": self.load,
        }


class LoadPoint(BaseModel):
    """負載點 λ/(μR)"""
    model_config = ConfigDict(frozen=True)

    load: float = Field(..., gt=0, description="無因次負載")

    @classmethod
    def from_scenario(cls, scenario: ScenarioParams) -> "LoadPoint":
        """由情境計算負載"""
        return cls(load=scenario.load)

    def arrival_rate(self, mu: float, capacity: int) -> float:
        """換算為到達率 λ"""
        return self.load * mu * capacity

    def consistent_with(self, scenario: ScenarioParams, rel_tol: float = 1e-12) -> bool:
        """確認負載與情境的 λ 一致"""
        expected = self.arrival_rate(scenario.mu, scenario.capacity)
        return abs(expected - scenario.lam) <= rel_tol * max(abs(scenario.lam), 1e-300)


# ===========================================
# 協定參數
# ===========================================

class ProtocolParams(BaseModel):
    """散播策略與可調參數 (N, n_f, n_d)"""
    model_config = ConfigDict(frozen=True)

    strategy: Strategy = Field(Strategy.INCREMENTAL, description="差分更新策略")
    full_dump_period: int = Field(1, ge=1, description="完整傾印週期 N（時槽）")
    retries_full: int = Field(1, ge=1, description="完整傾印的傳送次數 n_f")
    retries_diff: int = Field(1, ge=1, description="差分更新的傳送次數 n_d")

    @model_validator(mode="before")
    @classmethod
    def _normalize_full_dump(cls, data: Any) -> Any:
        # 完整傾印策略固定 N = 1，n_d 用不到，統一為 1
        if not isinstance(data, dict):
            return data
        if Strategy(data.get("strategy", Strategy.INCREMENTAL)) is not Strategy.FULL_DUMP:
            return data
        period = data.get("full_dump_period", 1)
        if period != 1:
            raise ValueError(f"完整傾印策略的週期必須為 1，收到 N={period}")
        return {**data, "full_dump_period": 1, "retries_diff": 1}

    @classmethod
    def full_dump_only(cls, retries_full: int = 1) -> "ProtocolParams":
        """每個時槽皆送完整傾印的協定"""
        return cls(strategy=Strategy.FULL_DUMP, retries_full=retries_full)

    @property
    def is_full_dump_only(self) -> bool:
        """N = 1 時不存在差分更新"""
        return self.full_dump_period == 1

    def label(self) -> str:
        """簡短描述，用於日誌"""
        return (
            f"{self.strategy.value}(N={self.full_dump_period}, "
            f"n_f={self.retries_full}, n_d={self.retries_diff})"
        )

    def to_row(self) -> dict:
        """CSV 列使用的參數欄位"""
        return {
            "strategy": self.strategy.value,
            "N": self.full_dump_period,
            "n_f": self.retries_full,
            "n_d": self.retries_diff,
        }
