"""
解析模型單元測試

測試 src/analysis/ 的功能。
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.analysis import (
    AnalyticModel,
    asymptotic_bases,
    asymptotic_report,
    avg_control_volume,
    loss_prob_diff,
    loss_prob_full,
    mean_deletions,
    mean_elements,
    message_size_distribution,
    relevance_all,
    relevance_per_cycle,
    relevance_per_neighbor,
)
from src.core.errors import ModelDomainError
from src.core.probability import addition_dist, ber_for_loss, deletion_dist, message_loss_prob
from src.markov import StationaryDistribution, build_kernel, solve_stationary
from src.models.params import ProtocolParams, ScenarioParams, SolveMode, Strategy


def explicit_cycle_relevance(p_f: float, p_d: float, period: int) -> float:
    """逐項加總的週期內相關性機率"""
    total = sum((1 - p_d) ** (i - 1) * p_d * (i / period) for i in range(1, period))
    return (1 - p_f) * (total + (1 - p_d) ** (period - 1))


class TestMeans:
    """⟨r⟩ 與 ⟨d⟩ 測試"""

    def test_point_mass_at_zero(self):
        """測試集中在 0 的分佈"""
        dist = StationaryDistribution.point_mass(100, 0)
        assert mean_elements(dist) == 0.0
        assert mean_deletions(dist, 0.01) == 0.0

    def test_point_mass_at_capacity(self):
        """測試集中在 R=1000 的分佈"""
        dist = StationaryDistribution.point_mass(1000, 1000)
        assert mean_elements(dist) == 1000.0
        assert mean_deletions(dist, 0.01) == pytest.approx(9.9502, abs=1e-4)

    def test_binomial_mean_identity(self, single_link_scenario):
        """測試 ⟨d⟩ = (1 − e^−μ)·⟨r⟩"""
        dist = solve_stationary(build_kernel(single_link_scenario))
        expected = -math.expm1(-single_link_scenario.mu) * mean_elements(dist)
        assert mean_deletions(dist, single_link_scenario.mu) == pytest.approx(expected, abs=1e-10)

    def test_asymptotic_deletions_match_point_mass(self, single_link_scenario):
        """測試漸近 ⟨d⟩ 等於點質量於 R 的精確值"""
        dist = StationaryDistribution.point_mass(1000, 1000)
        bases = asymptotic_bases(single_link_scenario)
        assert bases.avg_d == pytest.approx(mean_deletions(dist, 0.01), abs=1e-12)


class TestControlVolume:
    """平均控制資訊量測試"""

    def test_single_slot_cycle(self):
        """測試 N = 1 時只剩完整傾印項"""
        protocol = ProtocolParams(full_dump_period=1, retries_full=3)
        assert avg_control_volume(500.0, 5.0, protocol) == 1500.0

    def test_reference_value(self):
        """測試 N=10、n_f=2、n_d=1、⟨r⟩=1000、⟨d⟩=9.9502"""
        protocol = ProtocolParams(full_dump_period=10, retries_full=2, retries_diff=1)
        assert avg_control_volume(1000.0, 9.9502, protocol) == pytest.approx(217.91, abs=0.01)

    def test_long_cycle_limit(self):
        """測試 N → ∞ 時趨近 2⟨d⟩"""
        protocol = ProtocolParams(full_dump_period=10**9)
        assert avg_control_volume(1000.0, 10.0, protocol) == pytest.approx(20.0, rel=1e-5)

    def test_cumulative_rejected(self):
        """測試累積策略沒有封閉解"""
        protocol = ProtocolParams(strategy=Strategy.CUMULATIVE, full_dump_period=10)
        with pytest.raises(ModelDomainError):
            avg_control_volume(100.0, 1.0, protocol)

    @pytest.mark.parametrize("avg_r, avg_d", [(1000.0, 9.95), (10.0, 9.0), (100.0, 50.0)])
    def test_period_derivative_sign(self, avg_r, avg_d):
        """測試 ⟨V⟩ 對 N 的差分符號由 2n_d⟨d⟩ − n_f⟨r⟩ 決定"""
        sign = np.sign(2 * avg_d - avg_r)
        for period in range(1, 60):
            v0 = avg_control_volume(avg_r, avg_d, ProtocolParams(full_dump_period=period))
            v1 = avg_control_volume(avg_r, avg_d, ProtocolParams(full_dump_period=period + 1))
            assert np.sign(round(v1 - v0, 12)) == sign

    def test_increasing_in_retries(self):
        """測試 ⟨V⟩ 隨 n_f、n_d 遞增"""
        base = avg_control_volume(800.0, 8.0, ProtocolParams(full_dump_period=20))
        assert avg_control_volume(800.0, 8.0, ProtocolParams(full_dump_period=20, retries_full=2)) > base
        assert avg_control_volume(800.0, 8.0, ProtocolParams(full_dump_period=20, retries_diff=2)) > base


class TestLossProbabilities:
    """遺失機率測試"""

    def test_full_lossless(self, small_scenario):
        """測試 ber = 0"""
        dist = solve_stationary(build_kernel(small_scenario))
        assert loss_prob_full(dist, 0.0, 8, 3) == 0.0
        assert loss_prob_diff(dist, small_scenario, 3) == 0.0

    def test_full_point_mass(self):
        """測試點質量於 R 時 n_f = 1 為 p_err(R)、n_f = 2 約 1%"""
        dist = StationaryDistribution.point_mass(1000, 1000)
        ber = ber_for_loss(0.1, 1000, 16)
        assert loss_prob_full(dist, ber, 16, 1) == pytest.approx(0.1, rel=1e-10)
        assert loss_prob_full(dist, ber, 16, 2) == pytest.approx(0.01, rel=1e-10)

    def test_diff_matches_triple_sum(self, small_scenario):
        """測試 R=2、λ=1、μ=0.5、ber=0.01、V0=8 與三重加總一致"""
        scenario = small_scenario.with_neighbors((0.01,))
        pi = solve_stationary(build_kernel(scenario)).pi
        expected = 0.0
        for r in range(3):
            for d in range(r + 1):
                for n in range(2 + d - r + 1):
                    expected += (
                        pi[r] * deletion_dist(d, r, 0.5) * addition_dist(n, r, d, 1.0, 2)
                        * message_loss_prob(0.01, d + n, 8)
                    )
        assert loss_prob_diff(pi, scenario, 1) == pytest.approx(expected, rel=1e-12)
        assert loss_prob_diff(pi, scenario, 2) == pytest.approx(expected**2, rel=1e-12)

    def test_diff_empty_updates(self):
        """測試 λ = 0 時差分訊息為空"""
        scenario = ScenarioParams(lam=0.0, mu=0.01, capacity=20, element_size=16, neighbors=(0.05,))
        dist = solve_stationary(build_kernel(scenario))
        assert loss_prob_diff(dist, scenario, 1) == pytest.approx(0.0, abs=1e-12)

    def test_size_distribution_normalized(self, single_link_scenario):
        """測試差分訊息大小分佈總和為 1"""
        dist = solve_stationary(build_kernel(single_link_scenario))
        q = message_size_distribution(dist, single_link_scenario)
        assert q.size == 2001
        assert math.fsum(q) == pytest.approx(1.0, abs=1e-12)
        assert np.all(q >= 0)

    def test_strictly_decreasing_in_retries(self, single_link_scenario):
        """測試 p_f、p_d 隨傳送次數嚴格遞減"""
        model = AnalyticModel(single_link_scenario)
        reports = [model.evaluate(ProtocolParams(full_dump_period=20, retries_full=k, retries_diff=k)) for k in (1, 2, 3)]
        assert reports[0].p_f[0] > reports[1].p_f[0] > reports[2].p_f[0]
        assert reports[0].p_d[0] > reports[1].p_d[0] > reports[2].p_d[0]


class TestRelevance:
    """相關性機率測試"""

    def test_single_slot_cycle(self):
        """測試 N = 1 時為 1 − p_f"""
        assert relevance_per_cycle(0.1, 0.4, 1) == pytest.approx(0.9, rel=1e-15)

    def test_full_dump_always_lost(self):
        """測試 p_f = 1"""
        assert relevance_per_cycle(1.0, 0.2, 10) == 0.0

    def test_small_diff_loss_limit(self):
        """測試 p_d → 0 時取極限 1 − p_f"""
        assert relevance_per_cycle(0.2, 1e-15, 50) == pytest.approx(0.8)
        assert relevance_per_cycle(0.2, 0.0, 50) == pytest.approx(0.8)

    def test_explicit_sum_reference(self):
        """測試 p_f=0.1、p_d=0.2、N=4 與逐項加總一致"""
        assert relevance_per_cycle(0.1, 0.2, 4) == pytest.approx(explicit_cycle_relevance(0.1, 0.2, 4), abs=1e-12)

    @settings(max_examples=200)
    @given(
        p_f=st.floats(min_value=0.0, max_value=1.0),
        p_d=st.floats(min_value=1e-6, max_value=1.0),
        period=st.integers(min_value=1, max_value=200),
    )
    def test_closed_form_matches_sum(self, p_f, p_d, period):
        """測試封閉解與逐項加總一致"""
        closed = relevance_per_cycle(p_f, p_d, period)
        assert closed == pytest.approx(explicit_cycle_relevance(p_f, p_d, period), abs=1e-12)

    def test_vectorized(self):
        """測試陣列參數"""
        values = relevance_per_cycle(np.array([0.1, 0.1]), np.array([0.2, 0.0]), np.array([4, 4]))
        assert values.shape == (2,)
        assert values[1] == pytest.approx(0.9)

    def test_startup_factor(self):
        """測試 p̂_rel=1、γ=0.001、N=100 時為 0.95"""
        assert relevance_per_neighbor(1.0, 0.001, 100) == pytest.approx(0.95)
        assert relevance_per_neighbor(0.7, 0.0, 100) == 0.7
        assert relevance_per_neighbor(0.0, 0.001, 100) == 0.0

    def test_startup_domain(self):
        """測試 γN/2 ≥ 1 時拋出例外"""
        with pytest.raises(ModelDomainError):
            relevance_per_neighbor(1.0, 0.01, 200)

    def test_relevance_all(self):
        """測試所有鄰居的乘積"""
        assert relevance_all([0.99, 0.98, 0.97]) == pytest.approx(0.941094, abs=1e-6)
        assert relevance_all([0.8]) == 0.8
        assert relevance_all([0.9] * 5) == pytest.approx(0.9**5)


class TestAnalyticModel:
    """AnalyticModel 與報告測試"""

    def test_report_invariants(self, single_link_scenario):
        """測試報告的機率與平均值關係"""
        report = AnalyticModel(single_link_scenario).evaluate(
            ProtocolParams(full_dump_period=40, retries_full=2, retries_diff=1)
        )
        assert 0 <= report.avg_d <= report.avg_r <= 1000
        assert report.p_rel[0] <= report.p_hat_rel[0]
        assert report.p_rel_all <= min(report.p_rel)
        assert report.avg_v > 0
        assert report.mode is SolveMode.EXACT
        assert report.avg_v_bits == pytest.approx(report.avg_v * 16)

    def test_permutation_invariant(self):
        """測試鄰居順序不影響 p_rel_all"""
        kwargs = {"lam": 20.0, "mu": 0.05, "capacity": 60, "element_size": 16, "gamma": 0.001}
        protocol = ProtocolParams(full_dump_period=15, retries_full=2, retries_diff=2)
        first = AnalyticModel(ScenarioParams(neighbors=(1e-4, 5e-4, 2e-3), **kwargs)).evaluate(protocol)
        second = AnalyticModel(ScenarioParams(neighbors=(2e-3, 1e-4, 5e-4), **kwargs)).evaluate(protocol)
        assert first.p_rel_all == pytest.approx(second.p_rel_all, rel=1e-12)

    def test_startup_warning(self, single_link_scenario):
        """測試 γN > 0.1 時附上診斷"""
        report = AnalyticModel(single_link_scenario).evaluate(ProtocolParams(full_dump_period=150))
        assert any("γ·N" in warning for warning in report.warnings)

    def test_domain_error_for_long_cycle(self, single_link_scenario):
        """測試 N ≥ 2/γ"""
        with pytest.raises(ModelDomainError):
            AnalyticModel(single_link_scenario).evaluate(ProtocolParams(full_dump_period=2000))

    def test_short_lifetime_warning(self, small_scenario):
        """測試 1/μ < 10 時報告附上診斷"""
        report = AnalyticModel(small_scenario).evaluate(ProtocolParams(full_dump_period=2))
        assert report.warnings

    def test_to_row_echoes_parameters(self, single_link_scenario):
        """測試 CSV 列包含情境與協定"""
        row = AnalyticModel(single_link_scenario).evaluate(ProtocolParams(full_dump_period=10)).to_row()
        for key in ("lambda", "mu", "capacity", "gamma", "M", "N", "n_f", "n_d", "avg_v", "p_rel_all"):
            assert key in row


class TestAsymptotic:
    """漸近解測試"""

    @pytest.fixture
    def saturated(self, single_link_scenario):
        return single_link_scenario.with_load(2.0)

    def test_full_dump_every_slot(self, saturated):
        """測試 N=1、n_f=1 時 ⟨V⟩ = R"""
        report = asymptotic_report(saturated, ProtocolParams(full_dump_period=1))
        assert report.avg_v == pytest.approx(1000.0)
        assert report.mode is SolveMode.ASYMPTOTIC

    def test_reference_volume(self, saturated):
        """測試 N=10、n_f=n_d=1 時約 117.91"""
        report = asymptotic_report(saturated, ProtocolParams(full_dump_period=10))
        assert report.avg_v == pytest.approx(117.91, abs=0.01)
        assert report.avg_r == 1000.0

    def test_full_loss_is_capacity_loss(self, saturated):
        """測試 p_f = p_err(R)^n_f"""
        report = asymptotic_report(saturated, ProtocolParams(full_dump_period=10, retries_full=3))
        assert report.p_f[0] == pytest.approx(0.1**3, rel=1e-10)

    def test_matches_exact_at_high_load(self, saturated):
        """測試負載 2 時完整模型與漸近解相差 2% 以內"""
        protocol = ProtocolParams(full_dump_period=40, retries_full=2, retries_diff=1)
        exact = AnalyticModel(saturated).evaluate(protocol)
        approx = asymptotic_report(saturated, protocol)
        assert exact.avg_v == pytest.approx(approx.avg_v, rel=0.02)
        assert exact.p_rel_all == pytest.approx(approx.p_rel_all, rel=0.02)
