"""
解析模型

由穩態分佈推得平均控制資訊量、重傳後的遺失機率與資訊相關性機率。

- ⟨V⟩ = (1/N)·n_f·⟨r⟩ + 2·((N−1)/N)·n_d·⟨d⟩
- p_f = [Σ_r π_r·p_err(r)]^n_f
- p_d = [Σ_m q(m)·p_err(m)]^n_d，q 為差分訊息大小 d + n 的分佈
- p̂_rel = (1 − p_f)·(1 − (1 − p_d)^N) / (N·p_d)
- p_rel = p̂_rel·(1 − γN/2)
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Optional, Union

import numpy as np
from loguru import logger

from ..core.errors import ModelDomainError
from ..core.probability import (
    LossFunction,
    deletion_matrix,
    deletion_row,
    message_loss_probs,
    poisson_pmf,
    poisson_tails,
)
from ..markov.solver import StationaryDistribution, stationary_for
from ..models.params import ProtocolParams, ScenarioParams, SolveMode, Strategy
from ..models.reports import AnalyticReport

if TYPE_CHECKING:
    from ..utils.cache import StationaryCache

ArrayLike = Union[float, np.ndarray]

# p_d 低於此值時以極限 1 − p_f 取代 0/0
SMALL_DIFF_LOSS = 1e-12
# 刪除數分佈累積到此質量後截斷
DELETION_MASS_CUTOFF = 1.0 - 1e-12
# γN 超過此值時 (1 − γN/2) 近似的誤差不再可忽略
STARTUP_APPROX_LIMIT = 0.1


def _as_pi(pi: Union[StationaryDistribution, np.ndarray]) -> np.ndarray:
    return pi.pi if isinstance(pi, StationaryDistribution) else np.asarray(pi, dtype=float)


# ===========================================
# 平均值
# ===========================================

def mean_elements(pi: Union[StationaryDistribution, np.ndarray]) -> float:
    """⟨r⟩ = Σ r·π_r"""
    vector = _as_pi(pi)
    return float(np.arange(vector.size) @ vector)


def mean_deletions(pi: Union[StationaryDistribution, np.ndarray], mu: float) -> float:
    """
    ⟨d⟩ = Σ_d d·Σ_{r≥d} π_r·p_{d|r}

    等於 (1 − e^(−μ))·⟨r⟩（二項分佈平均）。
    """
    vector = _as_pi(pi)
    capacity = vector.size - 1
    per_d = vector @ deletion_matrix(capacity, mu)
    return float(np.arange(capacity + 1) @ per_d)


def avg_control_volume(
    avg_r: ArrayLike,
    avg_d: ArrayLike,
    protocol: ProtocolParams,
) -> float:
    """
    每時槽平均送出的元素數 ⟨V⟩

    Args:
        avg_r: 平均追蹤元素數
        avg_d: 每時槽平均刪除數
        protocol: 協定參數

    Returns:
        ⟨V⟩（元素/時槽）

    Raises:
        ModelDomainError: 累積策略沒有封閉解
    """
    if protocol.strategy is Strategy.CUMULATIVE:
        raise ModelDomainError("累積策略沒有平均資訊量的封閉解，請改用模擬器")
    return volume_formula(
        avg_r, avg_d, protocol.full_dump_period, protocol.retries_full, protocol.retries_diff
    )


def volume_formula(avg_r: ArrayLike, avg_d: ArrayLike, period, n_f, n_d) -> ArrayLike:
    """⟨V⟩ 公式本體，參數可為 numpy 陣列（調校器向量化評估用）"""
    period = np.asarray(period, dtype=float)
    result = n_f * avg_r / period + 2.0 * (period - 1.0) / period * n_d * avg_d
    return float(result) if np.ndim(result) == 0 else result


# ===========================================
# 遺失機率
# ===========================================

def loss_prob_full(
    pi: Union[StationaryDistribution, np.ndarray],
    ber: float,
    element_size: int,
    n_f: int,
    loss_fn: LossFunction = message_loss_probs,
) -> float:
    """
    n_f 次傳送後完整傾印仍遺失的機率

    Args:
        pi: 穩態分佈
        ber: 位元錯誤率
        element_size: 元素大小（位元）
        n_f: 傳送次數
        loss_fn: 單則訊息遺失模型

    Returns:
        [Σ_r π_r·p_err(r)]^n_f
    """
    vector = _as_pi(pi)
    base = float(vector @ loss_fn(ber, np.arange(vector.size), element_size))
    return base ** n_f


def message_size_distribution(
    pi: Union[StationaryDistribution, np.ndarray],
    scenario: ScenarioParams,
) -> np.ndarray:
    """
    差分訊息大小 m = d + n 的分佈 q(m)，m = 0..2R

    對每個 r，刪除數 d 依二項分佈、新增數 n 依剩餘容量 R − r + d 截斷的
    Poisson 分佈。d 的累積質量超過 1 − 1e-12 後截斷。

    Args:
        pi: 穩態分佈
        scenario: 情境參數（用到 λ、μ、R）

    Returns:
        長度 2R+1 的機率向量
    """
    vector = _as_pi(pi)
    capacity = scenario.capacity
    if vector.size != capacity + 1:
        raise ModelDomainError(f"穩態分佈長度 {vector.size} 與容量 R={capacity} 不符")

    pmf = poisson_pmf(np.arange(capacity + 1), scenario.lam)
    tails = poisson_tails(capacity, scenario.lam)
    q = np.zeros(2 * capacity + 1)

    for r in np.flatnonzero(vector):
        deletions = deletion_row(int(r), scenario.mu)
        cumulative = np.cumsum(deletions)
        last = min(int(np.searchsorted(cumulative, DELETION_MASS_CUTOFF)), int(r))
        for d in range(last + 1):
            weight = vector[r] * deletions[d]
            if weight == 0.0:
                continue
            room = capacity - int(r) + d
            q[d:d + room] += weight * pmf[:room]
            q[d + room] += weight * tails[room]

    return q / math.fsum(q)


def loss_prob_diff(
    pi: Union[StationaryDistribution, np.ndarray],
    scenario: ScenarioParams,
    n_d: int,
    ber: Optional[float] = None,
    sizes: Optional[np.ndarray] = None,
    loss_fn: LossFunction = message_loss_probs,
) -> float:
    """
    n_d 次傳送後差分更新仍遺失的機率

    Args:
        pi: 穩態分佈
        scenario: 情境參數
        n_d: 傳送次數
        ber: 位元錯誤率，預設取第一位鄰居
        sizes: 預先計算的訊息大小分佈 q
        loss_fn: 單則訊息遺失模型

    Returns:
        [Σ_m q(m)·p_err(m)]^n_d
    """
    if ber is None:
        ber = scenario.neighbors[0]
    if sizes is None:
        sizes = message_size_distribution(pi, scenario)
    base = float(sizes @ loss_fn(ber, np.arange(sizes.size), scenario.element_size))
    return base ** n_d


# ===========================================
# 相關性機率
# ===========================================

def relevance_per_cycle(p_f: ArrayLike, p_d: ArrayLike, period: ArrayLike) -> ArrayLike:
    """
    單一完整傾印週期內的相關性機率 p̂_rel

    (1 − p_f)·(1 − (1 − p_d)^N)/(N·p_d)；N = 1 或 p_d < 1e-12 時為 1 − p_f。
    參數可為 numpy 陣列。
    """
    p_f = np.asarray(p_f, dtype=float)
    p_d = np.asarray(p_d, dtype=float)
    period = np.asarray(period, dtype=float)

    small = (p_d < SMALL_DIFF_LOSS) | (period == 1.0)
    safe_p = np.where(small, 0.5, p_d)
    with np.errstate(divide="ignore"):
        factor = -np.expm1(period * np.log1p(-safe_p)) / (period * safe_p)
    factor = np.where(small, 1.0, factor)

    result = (1.0 - p_f) * factor
    return float(result) if np.ndim(result) == 0 else result


def startup_factor(gamma: float, period: int) -> float:
    """
    1 − γN/2

    Raises:
        ModelDomainError: γN/2 ≥ 1，完整傾印週期超過平均連線期
    """
    half = gamma * period / 2.0
    if half >= 1.0:
        raise ModelDomainError(
            f"γ·N/2 = {half:.6g} ≥ 1：完整傾印週期 N={period} 超過平均連線期 1/γ"
        )
    return 1.0 - half


def relevance_per_neighbor(p_hat_rel: float, gamma: float, period: int) -> float:
    """
    考慮啟動期後的相關性機率 p_rel = p̂_rel·(1 − γN/2)

    Raises:
        ModelDomainError: γN/2 ≥ 1
    """
    return float(p_hat_rel) * startup_factor(gamma, period)


def relevance_all(per_neighbor: Iterable[float]) -> float:
    """所有鄰居皆相關的機率 Π_i p_rel⁽ⁱ⁾"""
    return float(math.prod(per_neighbor))


# ===========================================
# 報告組裝
# ===========================================

@dataclass(frozen=True)
class LossBases:
    """
    與 (N, n_f, n_d) 無關的量，供多組協定重複使用

    Attributes:
        avg_r: ⟨r⟩
        avg_d: ⟨d⟩
        full: 每位鄰居單次完整傾印遺失機率 Σπ·p_err(r)
        diff: 每位鄰居單次差分更新遺失機率 Σq·p_err(m)
        mode: 完整模型或漸近解
    """
    avg_r: float
    avg_d: float
    full: np.ndarray
    diff: np.ndarray
    mode: SolveMode = SolveMode.EXACT


def build_report(
    scenario: ScenarioParams,
    protocol: ProtocolParams,
    bases: LossBases,
    warnings: Iterable[str] = (),
) -> AnalyticReport:
    """
    由損失基底組出 AnalyticReport

    Raises:
        ModelDomainError: 累積策略，或 γN/2 ≥ 1
    """
    period = protocol.full_dump_period
    avg_v = avg_control_volume(bases.avg_r, bases.avg_d, protocol)
    factor = startup_factor(scenario.gamma, period)

    p_f = bases.full ** protocol.retries_full
    p_d = bases.diff ** protocol.retries_diff
    p_hat = np.atleast_1d(relevance_per_cycle(p_f, p_d, period))
    p_rel = p_hat * factor

    notes = list(warnings)
    if scenario.gamma * period > STARTUP_APPROX_LIMIT:
        note = f"γ·N = {scenario.gamma * period:.3g} > {STARTUP_APPROX_LIMIT:g}，啟動期近似誤差可能不可忽略"
        logger.debug(note)
        notes.append(note)

    return AnalyticReport(
        mode=bases.mode,
        scenario=scenario,
        protocol=protocol,
        avg_r=bases.avg_r,
        avg_d=bases.avg_d,
        p_f=tuple(float(x) for x in p_f),
        p_d=tuple(float(x) for x in p_d),
        p_hat_rel=tuple(float(x) for x in p_hat),
        p_rel=tuple(float(x) for x in p_rel),
        p_rel_all=min(max(relevance_all(p_rel), 0.0), 1.0),
        avg_v=avg_v,
        warnings=tuple(notes),
    )


class AnalyticModel:
    """
    單一情境的解析模型

    穩態分佈、⟨r⟩、⟨d⟩ 與差分訊息大小分佈只計算一次，
    之後可對任意多組協定參數評估。
    """

    def __init__(
        self,
        scenario: ScenarioParams,
        cache: Optional["StationaryCache"] = None,
        loss_fn: LossFunction = message_loss_probs,
    ):
        """
        初始化解析模型

        Args:
            scenario: 情境參數
            cache: 選用的穩態分佈磁碟快取
            loss_fn: 單則訊息遺失模型
        """
        self.scenario = scenario
        self.loss_fn = loss_fn
        self.distribution = stationary_for(scenario, cache=cache)
        self.avg_r = mean_elements(self.distribution)
        self.avg_d = mean_deletions(self.distribution, scenario.mu)
        self.warnings = scenario.model_warnings()
        for warning in self.warnings:
            logger.warning(warning)

    @property
    def pi(self) -> np.ndarray:
        """穩態分佈向量"""
        return self.distribution.pi

    @cached_property
    def size_distribution(self) -> np.ndarray:
        """差分訊息大小分佈 q(m)"""
        return message_size_distribution(self.distribution, self.scenario)

    def loss_bases(self) -> LossBases:
        """每位鄰居的單次傳送遺失機率"""
        return self._bases

    @cached_property
    def _bases(self) -> LossBases:
        element_size = self.scenario.element_size
        full_sizes = np.arange(self.pi.size)
        diff_sizes = np.arange(self.size_distribution.size)
        full, diff = [], []
        for ber in self.scenario.neighbors:
            full.append(float(self.pi @ self.loss_fn(ber, full_sizes, element_size)))
            diff.append(float(self.size_distribution @ self.loss_fn(ber, diff_sizes, element_size)))
        return LossBases(
            avg_r=self.avg_r,
            avg_d=self.avg_d,
            full=np.array(full),
            diff=np.array(diff),
        )

    def evaluate(self, protocol: ProtocolParams) -> AnalyticReport:
        """
        評估一組協定參數

        Args:
            protocol: 協定參數（完整傾印或增量策略）

        Returns:
            AnalyticReport

        Raises:
            ModelDomainError: 累積策略，或 γN/2 ≥ 1
        """
        report = build_report(self.scenario, protocol, self._bases, self.warnings)
        logger.debug(
            f"解析評估: {protocol.label()} → ⟨V⟩={report.avg_v:.6g}, p_rel_all={report.p_rel_all:.6g}"
        )
        return report
