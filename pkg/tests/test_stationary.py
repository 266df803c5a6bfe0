"""
轉移矩陣與穩態分佈單元測試

測試 src/markov/ 的功能。
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import ConvergenceError
from src.core.probability import addition_dist, deletion_dist, deletion_row
from src.markov import (
    SolverMethod,
    StationaryDistribution,
    build_kernel,
    build_kernel_from,
    solve_stationary,
    stationary_for,
    stationary_residual,
)
from src.utils.cache import StationaryCache


def enumerate_kernel(lam: float, mu: float, capacity: int) -> np.ndarray:
    """逐一列舉 (d, n) 組合建構轉移矩陣"""
    matrix = np.zeros((capacity + 1, capacity + 1))
    for r in range(capacity + 1):
        for d in range(r + 1):
            room = capacity + d - r
            for n in range(room + 1):
                matrix[r, r - d + n] += deletion_dist(d, r, mu) * addition_dist(n, r, d, lam, capacity)
    return matrix


class TestBuildKernel:
    """轉移矩陣建構測試"""

    def test_matches_enumeration(self, small_scenario):
        """測試 R=2、λ=1、μ=0.5 與逐一列舉一致"""
        kernel = build_kernel(small_scenario)
        np.testing.assert_allclose(kernel.matrix, enumerate_kernel(1.0, 0.5, 2), atol=1e-14)

    def test_matches_enumeration_larger(self):
        """測試較大容量的卷積結果"""
        kernel = build_kernel_from(3.7, 0.2, 12)
        np.testing.assert_allclose(kernel.matrix, enumerate_kernel(3.7, 0.2, 12), atol=1e-13)

    def test_no_arrivals_is_lower_triangular(self):
        """測試 λ = 0 時只能減少"""
        matrix = build_kernel_from(0.0, 0.1, 20).matrix
        assert np.all(np.triu(matrix, k=1) == 0.0)
        assert matrix[0, 0] == 1.0

    def test_heavy_deletion_empties_store(self):
        """測試 p̃ → 1 時下一時槽幾乎全部刪除"""
        matrix = build_kernel_from(0.0, 50.0, 10).matrix
        np.testing.assert_allclose(matrix[:, 0], 1.0, atol=1e-12)

    def test_rows_sum_to_one(self):
        """測試列和為 1"""
        matrix = build_kernel_from(12.0, 0.01, 1000).matrix
        assert np.max(np.abs(matrix.sum(axis=1) - 1.0)) < 1e-10

    def test_read_only(self, small_scenario):
        """測試建構後唯讀"""
        kernel = build_kernel(small_scenario)
        with pytest.raises(ValueError):
            kernel.matrix[0, 0] = 0.5


class TestSolveStationary:
    """穩態分佈求解測試"""

    def test_no_arrivals_absorbs_at_zero(self):
        """測試 λ = 0 時全部機率集中在 0"""
        dist = solve_stationary(build_kernel_from(0.0, 0.1, 30))
        assert dist.pi[0] == pytest.approx(1.0)
        assert dist.pi[1:].sum() == pytest.approx(0.0, abs=1e-12)

    def test_solvers_agree(self):
        """測試直接法與冪次迭代一致"""
        kernel = build_kernel_from(4.0, 0.05, 120)
        direct = solve_stationary(kernel, method=SolverMethod.DIRECT)
        power = solve_stationary(kernel, method=SolverMethod.POWER)
        np.testing.assert_allclose(direct.pi, power.pi, atol=1e-8)
        assert power.iterations > 0

    def test_residual_small(self, single_link_scenario):
        """測試 ‖πP − π‖∞ < 1e-8"""
        kernel = build_kernel(single_link_scenario)
        dist = solve_stationary(kernel)
        assert stationary_residual(dist.pi, kernel) < 1e-8
        assert math.fsum(dist.pi) == pytest.approx(1.0, abs=1e-10)

    def test_mean_drift_balance(self):
        """測試穩態下平均新增數等於平均刪除數"""
        lam, mu, capacity = 6.0, 0.05, 100
        dist = solve_stationary(build_kernel_from(lam, mu, capacity))
        deletions = sum(dist.pi[r] * r * (1 - math.exp(-mu)) for r in range(capacity + 1))
        additions = 0.0
        for r in range(capacity + 1):
            d_row = deletion_row(r, mu)
            for d in range(r + 1):
                room = capacity + d - r
                expected_n = sum(n * addition_dist(n, r, d, lam, capacity) for n in range(room + 1))
                additions += dist.pi[r] * d_row[d] * expected_n
        assert additions == pytest.approx(deletions, abs=1e-8)

    @settings(max_examples=10, deadline=None)
    @given(low=st.floats(min_value=0.1, max_value=3.0), step=st.floats(min_value=0.1, max_value=3.0))
    def test_stochastic_monotonicity_in_load(self, low, step):
        """測試 λ 增加時分佈一階隨機優勢上移"""
        low_cdf = solve_stationary(build_kernel_from(low, 0.1, 40)).cdf()
        high_cdf = solve_stationary(build_kernel_from(low + step, 0.1, 40)).cdf()
        assert np.all(high_cdf <= low_cdf + 1e-10)

    def test_power_iteration_cap(self):
        """測試迭代上限時回報殘差"""
        kernel = build_kernel_from(4.0, 0.001, 60)
        with pytest.raises(ConvergenceError) as excinfo:
            solve_stationary(kernel, method=SolverMethod.POWER, max_iter=3)
        assert excinfo.value.iterations == 3
        assert excinfo.value.residual > 0

    def test_deterministic(self, small_scenario):
        """測試同一矩陣結果相同"""
        kernel = build_kernel(small_scenario)
        np.testing.assert_array_equal(solve_stationary(kernel).pi, solve_stationary(kernel).pi)

    def test_debug_csv(self, small_scenario, temp_dir):
        """測試除錯用 CSV 輸出"""
        dist = solve_stationary(build_kernel(small_scenario))
        path = dist.to_csv(str(temp_dir / "pi.csv"))
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "r,pi_r"
        assert len(lines) == 4


class TestStationaryDistribution:
    """StationaryDistribution 驗證測試"""

    def test_point_mass(self):
        """測試退化分佈"""
        dist = StationaryDistribution.point_mass(10, 10)
        assert dist.mean() == 10.0
        assert dist.capacity == 10

    def test_rejects_unnormalized(self):
        """測試總和不為 1"""
        with pytest.raises(ValueError):
            StationaryDistribution(pi=np.array([0.5, 0.4]))

    def test_rejects_negative(self):
        """測試負值"""
        with pytest.raises(ValueError):
            StationaryDistribution(pi=np.array([1.2, -0.2]))


class TestStationaryFor:
    """情境層級的求解與快取測試"""

    def test_uses_disk_cache(self, small_scenario, temp_dir):
        """測試第二次呼叫讀取磁碟快取"""
        cache = StationaryCache(cache_dir=str(temp_dir))
        first = stationary_for(small_scenario, cache=cache)
        second = stationary_for(small_scenario, cache=cache)
        assert second.method == "cache"
        np.testing.assert_allclose(first.pi, second.pi, rtol=1e-15)


@pytest.mark.slow
class TestMonteCarloOracle:
    """與長時間模擬的元素數分佈比較"""

    def test_small_scenario_occupancy(self, small_scenario):
        """測試 R=2、λ=1、μ=0.5 的穩態與經驗分佈一致"""
        from src.simulation.engine import simulate_occupancy

        dist = solve_stationary(build_kernel(small_scenario))
        empirical = simulate_occupancy(small_scenario, horizon=2_000_000, warmup=100, seed=5)
        np.testing.assert_allclose(empirical, dist.pi, atol=2e-3)


def random_small_scenarios(count: int = 20, seed: int = 2024) -> list[tuple[float, float, int]]:
    """固定種子產生的小情境 (λ, μ, R)，R ≤ 30"""
    rng = np.random.default_rng(seed)
    scenarios = []
    for _ in range(count):
        capacity = int(rng.integers(1, 31))
        mu = float(rng.uniform(0.1, 0.5))
        load = float(rng.uniform(0.1, 1.5))
        scenarios.append((load * mu * capacity, mu, capacity))
    return scenarios


@pytest.mark.slow
class TestRandomSmallScenarios:
    """隨機小情境上的穩態正確性驗收測試"""

    @pytest.mark.parametrize("lam,mu,capacity", random_small_scenarios())
    def test_solvers_and_residual(self, lam, mu, capacity):
        """測試直接法與冪次迭代逐項相差 1e-8 以內，殘差小於 1e-8"""
        kernel = build_kernel_from(lam, mu, capacity)
        direct = solve_stationary(kernel, method=SolverMethod.DIRECT)
        power = solve_stationary(kernel, method=SolverMethod.POWER)
        np.testing.assert_allclose(direct.pi, power.pi, rtol=0, atol=1e-8)
        assert stationary_residual(direct.pi, kernel) < 1e-8
        assert stationary_residual(power.pi, kernel) < 1e-8

    @pytest.mark.parametrize("lam,mu,capacity", random_small_scenarios())
    def test_occupancy_total_variation(self, lam, mu, capacity):
        """測試 10⁶ 時槽的元素數經驗分佈與穩態的總變差距離小於 0.02"""
        from src.models.params import ScenarioParams
        from src.simulation.engine import simulate_occupancy

        scenario = ScenarioParams(lam=lam, mu=mu, capacity=capacity, element_size=8, neighbors=(0.0,))
        pi = solve_stationary(build_kernel_from(lam, mu, capacity)).pi
        empirical = simulate_occupancy(scenario, horizon=1_000_000, warmup=200, seed=11)
        assert 0.5 * np.abs(empirical - pi).sum() < 0.02
