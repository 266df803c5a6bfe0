"""
報告資料模型

解析模型與模擬器輸出的 Pydantic 資料模型，皆可轉為 CSV 列。
"""

from pydantic import BaseModel, ConfigDict, Field

from .params import ProtocolParams, ScenarioParams, SolveMode


# ===========================================
# 解析模型報告
# ===========================================

class AnalyticReport(BaseModel):
    """解析模型推得的各項指標（機率欄位依鄰居順序排列）"""
    model_config = ConfigDict(frozen=True)

    mode: SolveMode = Field(SolveMode.EXACT, description="完整模型或漸近解")
    scenario: ScenarioParams = Field(..., description="情境參數")
    protocol: ProtocolParams = Field(..., description="協定參數")
    avg_r: float = Field(..., ge=0, description="平均追蹤元素數 ⟨r⟩")
    avg_d: float = Field(..., ge=0, description="每時槽平均刪除數 ⟨d⟩")
    p_f: tuple[float, ...] = Field(..., description="n_f 次傳送後完整傾印遺失機率（每位鄰居）")
    p_d: tuple[float, ...] = Field(..., description="n_d 次傳送後差分更新遺失機率（每位鄰居）")
    p_hat_rel: tuple[float, ...] = Field(..., description="單一完整傾印週期內的相關性機率")
    p_rel: tuple[float, ...] = Field(..., description="考慮啟動期後的相關性機率")
    p_rel_all: float = Field(..., ge=0, le=1, description="所有鄰居皆相關的機率")
    avg_v: float = Field(..., ge=0, description="每時槽平均控制資訊量（元素）")
    warnings: tuple[str, ...] = Field(default_factory=tuple, description="近似範圍診斷")

    @property
    def avg_v_bits(self) -> float:
        """每時槽平均控制資訊量（位元）"""
        return self.avg_v * self.scenario.element_size

    def to_row(self) -> dict:
        """
        轉換為 CSV 列

        多位鄰居時，遺失機率取最差者、相關性取最低者。
        """
        return {
            "mode": self.mode.value,
            **self.scenario.to_row(),
            **self.protocol.to_row(),
            "avg_r": self.avg_r,
            "avg_d": self.avg_d,
            "p_f": max(self.p_f),
            "p_d": max(self.p_d),
            "p_hat_rel": min(self.p_hat_rel),
            "p_rel": min(self.p_rel),
            "p_rel_all": self.p_rel_all,
            "avg_v": self.avg_v,
            "avg_v_bits": self.avg_v_bits,
        }


# ===========================================
# 模擬報告
# ===========================================

class RunSummary(BaseModel):
    """單次模擬執行的統計"""
    model_config = ConfigDict(frozen=True)

    run_index: int = Field(..., ge=0)
    mean_volume: float = Field(..., ge=0, description="每時槽平均送出元素數")
    mean_relevance: float = Field(..., ge=0, le=1, description="所有連線鄰居皆相關的時槽比例")
    mean_additions: float = Field(..., ge=0)
    mean_deletions: float = Field(..., ge=0)
    mean_elements: float = Field(..., ge=0)


class SimulationReport(BaseModel):
    """多次模擬執行的彙總結果"""
    model_config = ConfigDict(frozen=True)

    scenario: ScenarioParams
    protocol: ProtocolParams
    mean_volume: float = Field(..., ge=0, description="每時槽平均送出元素數")
    mean_relevance: float = Field(..., ge=0, le=1, description="所有連線鄰居皆相關的時槽比例")
    runs: int = Field(..., ge=1)
    horizon: int = Field(..., ge=1, description="每次執行的總時槽數")
    warmup: int = Field(..., ge=0, description="不計入統計的暖機時槽數")
    seed: int
    volume_ci_halfwidth: float = Field(0.0, ge=0, description="95% 信賴區間半寬")
    relevance_ci_halfwidth: float = Field(0.0, ge=0, description="95% 信賴區間半寬")
    mean_additions: float = Field(0.0, ge=0)
    mean_deletions: float = Field(0.0, ge=0)
    mean_elements: float = Field(0.0, ge=0)
    per_run: tuple[RunSummary, ...] = Field(default_factory=tuple)

    def to_row(self) -> dict:
        """彙總列"""
        return {
            **self.scenario.to_row(),
            **self.protocol.to_row(),
            "run": "aggregate",
            "runs": self.runs,
            "horizon": self.horizon,
            "warmup": self.warmup,
            "seed": self.seed,
            "mean_volume": self.mean_volume,
            "volume_ci_halfwidth": self.volume_ci_halfwidth,
            "mean_relevance": self.mean_relevance,
            "relevance_ci_halfwidth": self.relevance_ci_halfwidth,
            "mean_additions": self.mean_additions,
            "mean_deletions": self.mean_deletions,
            "mean_elements": self.mean_elements,
        }

    def per_run_rows(self) -> list[dict]:
        """每次執行各一列"""
        base = {**self.scenario.to_row(), **self.protocol.to_row()}
        return [
            {
                **base,
                "run": run.run_index,
                "runs": self.runs,
                "horizon": self.horizon,
                "warmup": self.warmup,
                "seed": self.seed,
                "mean_volume": run.mean_volume,
                "volume_ci_halfwidth": None,
                "mean_relevance": run.mean_relevance,
                "relevance_ci_halfwidth": None,
                "mean_additions": run.mean_additions,
                "mean_deletions": run.mean_deletions,
                "mean_elements": run.mean_elements,
            }
            for run in self.per_run
        ]
