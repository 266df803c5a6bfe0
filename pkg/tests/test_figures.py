"""
策略比較與圖表資料單元測試

測試 src/simulation/compare.py 與 src/experiments/figures.py 的功能。
"""

from unittest.mock import patch

import numpy as np
import pytest

from src.core.errors import ConfigError
from src.experiments import FigureId, build_figure, figure_sensitivity, figure_validate, gamma_critical
from src.models.experiment import ExperimentConfig
from src.models.params import ScenarioParams, Strategy
from src.simulation.compare import best_by_simulation, compare_strategies, period_candidates, retry_grid
from src.simulation.engine import GridResult


@pytest.fixture
def lossless_compare_scenario():
    """無遺失、R=20 的比較情境"""
    return ScenarioParams.from_load(
        0.5, mu=0.05, capacity=20, element_size=16, gamma=0.002, neighbors=(0.0,), p_thresh=0.95
    )


@pytest.fixture
def load_sweep_dict(sample_experiment_dict):
    """在最小實驗設定上加入負載掃描"""
    data = dict(sample_experiment_dict)
    data["sweep"] = {"axis": "load", "values": [0.5, 1.0]}
    return data


class TestPeriodCandidates:
    """N 候選格點測試"""

    def test_includes_both_ends(self):
        """測試包含 1 與上限"""
        grid = period_candidates(50, 4)
        assert grid[0] == 1
        assert grid[-1] == 50
        assert grid == sorted(set(grid))

    def test_deduplicates_small_upper(self):
        """測試上限小於格點數時去除重複"""
        assert period_candidates(3, 12) == [1, 2, 3]

    def test_empty_when_infeasible(self):
        """測試上限為 0 時沒有候選"""
        assert period_candidates(0, 12) == []


class TestRetryGrid:
    """重傳格點測試"""

    def test_full_grid(self):
        """測試 N > 1 時展開 n_f × n_d"""
        assert retry_grid(2, 5) == [(1, 1), (1, 2), (2, 1), (2, 2)]

    def test_full_dump_only(self):
        """測試 N = 1 時只展開 n_f"""
        assert retry_grid(3, 1) == [(1, 1), (2, 1), (3, 1)]


class TestBestBySimulation:
    """以模擬結果判斷可行性的測試"""

    @staticmethod
    def _fixed_grid(relevance_per_run):
        def _grid(scenario, strategy, period, pairs, **kwargs):
            relevance = np.array([[value] * len(pairs) for value in relevance_per_run])
            return GridResult(
                pairs=np.asarray(pairs).reshape(-1, 2),
                volumes=np.full_like(relevance, 3.0),
                relevance=relevance,
                outcomes=(),
            )
        return _grid

    def _search(self, scenario):
        return best_by_simulation(
            scenario, Strategy.INCREMENTAL, [2], retry_limit=1, runs=4, seed=0, horizon=100, warmup=10
        )

    def test_noisy_mean_above_threshold_rejected(self, lossless_compare_scenario):
        """測試平均值過門檻但信賴區間下界未過時不算可行"""
        with patch("src.simulation.compare.simulate_grid", self._fixed_grid([0.99, 0.92, 0.98, 0.93])):
            best, evaluated = self._search(lossless_compare_scenario)
        assert best is None
        assert evaluated == 1

    def test_records_half_width(self, lossless_compare_scenario):
        """測試可行解帶有相關性信賴區間半寬"""
        with patch("src.simulation.compare.simulate_grid", self._fixed_grid([0.99, 0.98, 0.99, 0.98])):
            best, _ = self._search(lossless_compare_scenario)
        assert best is not None
        assert best.relevance == pytest.approx(0.985)
        assert 0 < best.relevance_ci_halfwidth < 0.01
        assert best.relevance - best.relevance_ci_halfwidth >= lossless_compare_scenario.p_thresh


class TestCompareStrategies:
    """策略比較測試"""

    def test_lossless_ordering(self, lossless_compare_scenario):
        """測試無遺失時兩策略皆用單次傳送，且增量不多於累積"""
        table = compare_strategies(
            lossless_compare_scenario,
            load_grid=[0.5],
            runs=1,
            seed=2,
            horizon=2000,
            retry_limit=2,
            period_points=4,
        )
        assert len(table) == 2
        assert table["feasible"].all()
        assert (table["n_f"] == 1).all()
        assert (table["n_d"] == 1).all()
        volumes = dict(zip(table["strategy"], table["volume"]))
        assert volumes["incremental"] <= volumes["cumulative"]

    def test_rows_per_grid_point(self, lossless_compare_scenario):
        """測試每個 (μ, 負載, 策略) 一列"""
        table = compare_strategies(
            lossless_compare_scenario,
            load_grid=[0.25, 0.5],
            mu_grid=[0.05, 0.1],
            runs=1,
            seed=2,
            horizon=500,
            warmup=50,
            retry_limit=1,
            period_points=2,
        )
        assert len(table) == 8
        assert set(table["strategy"]) == {"incremental", "cumulative"}
        assert {"volume", "relevance", "relevance_ci_halfwidth", "evaluated", "seed"} <= set(table.columns)

    def test_infeasible_rows_are_empty(self, lossless_compare_scenario):
        """測試 N_max = 0 時仍輸出空列"""
        scenario = lossless_compare_scenario.model_copy(update={"gamma": 0.5})
        table = compare_strategies(scenario, load_grid=[0.5], runs=1, seed=1, horizon=200, warmup=10)
        assert not table["feasible"].any()
        assert table["volume"].isna().all()
        assert (table["evaluated"] == 0).all()

    def test_rejects_empty_grid(self, lossless_compare_scenario):
        """測試空負載格點"""
        with pytest.raises(ValueError):
            compare_strategies(lossless_compare_scenario, load_grid=[], seed=1)


class TestFigureValidate:
    """解析模型驗證圖表測試"""

    def test_analytic_rows(self, load_sweep_dict):
        """測試不含模擬時每格點輸出三列"""
        config = ExperimentConfig.from_dict(load_sweep_dict)
        table = figure_validate(config, include_simulation=False, workers=1)
        assert len(table) == 6
        assert list(table.columns[:4]) == ["load", "mu", "source", "volume"]
        assert set(table["source"]) == {"analytic", "asymptotic", "asymptotic_exact"}

    def test_analytic_optimum_not_worse(self, load_sweep_dict):
        """測試完整模型最佳量不大於漸近參數在完整模型下的可行量"""
        config = ExperimentConfig.from_dict(load_sweep_dict)
        table = figure_validate(config, include_simulation=False, workers=1)
        for load, group in table.groupby("load"):
            rows = group.set_index("source")
            exact = rows.loc["analytic"]
            checked = rows.loc["asymptotic_exact"]
            if checked["relevance"] >= config.scenario.p_thresh:
                assert exact["volume"] <= checked["volume"] * (1 + 1e-12)

    def test_simulation_requires_seed(self, load_sweep_dict):
        """測試模擬列需要種子"""
        data = dict(load_sweep_dict)
        data["run"] = {"horizon": 1000, "runs": 1}
        config = ExperimentConfig.from_dict(data)
        with pytest.raises(ConfigError):
            figure_validate(config, workers=1)

    def test_requires_load_axis(self, sample_experiment_dict):
        """測試缺少負載掃描軸"""
        config = ExperimentConfig.from_dict(sample_experiment_dict)
        with pytest.raises(ConfigError) as excinfo:
            figure_validate(config, include_simulation=False)
        assert "sweep.axis" in excinfo.value.field_paths


class TestFigureSensitivity:
    """參數敏感度圖表測試"""

    @pytest.fixture
    def sensitivity_config(self, sample_experiment_dict):
        data = dict(sample_experiment_dict)
        data["protocol"] = {"mode": "asymptotic"}
        data["sweep"] = {
            "axis": "gamma",
            "values": [0.0001, 0.001, 0.05],
            "m_values": [1, 10],
            "loss_levels": [0.1],
        }
        return ExperimentConfig.from_dict(data)

    def test_grid_shape(self, sensitivity_config):
        """測試每個 (M, p_err(R), γ) 一列"""
        table = figure_sensitivity(sensitivity_config, workers=1)
        assert len(table) == 6
        assert set(table["M"]) == {1, 10}
        assert (table["mode"] == "asymptotic").all()

    def test_never_worse_than_full_dump(self, sensitivity_config):
        """測試調校結果不大於完整傾印基準"""
        table = figure_sensitivity(sensitivity_config, workers=1)
        ratios = table["volume_ratio"].dropna()
        assert not ratios.empty
        assert (ratios <= 1.0 + 1e-12).all()

    def test_volume_grows_with_gamma(self, sensitivity_config):
        """測試 γ 增加時最佳量不減"""
        table = figure_sensitivity(sensitivity_config, workers=1)
        for _, group in table.groupby(["M", "p_err_level"]):
            volumes = group.sort_values("gamma")["volume"].dropna().tolist()
            assert volumes == sorted(volumes)

    def test_critical_gamma_per_group(self, sensitivity_config):
        """測試 γ_critical 為每組可行的最大 γ"""
        table = figure_sensitivity(sensitivity_config, workers=1)
        crowded = table[table["M"] == 10]
        assert not crowded[crowded["gamma"] == 0.05]["feasible"].any()
        assert (crowded["gamma_critical"] == 0.001).all()

    def test_mode_override(self, sensitivity_config):
        """測試呼叫端指定求解模式"""
        table = figure_sensitivity(sensitivity_config, mode="exact", workers=1)
        assert (table["mode"] == "exact").all()


class TestSensitivityGrid:
    """隨附敏感度實驗檔（γ × M ∈ {10, 50} × p_err(R) ∈ {1%, 10%}）的單調性測試"""

    @pytest.fixture(scope="class")
    def table(self):
        config = ExperimentConfig.from_yaml("config/experiments/sensitivity.yaml")
        frame = figure_sensitivity(config, workers=1)
        # 不可行的格點視為無限大的資訊量
        frame["volume_or_inf"] = frame["volume"].where(frame["feasible"].astype(bool), float("inf"))
        return frame

    @staticmethod
    def _nondecreasing(values) -> bool:
        values = list(values)
        return all(b >= a for a, b in zip(values, values[1:]))

    def test_grid_shape(self, table):
        """測試每個 (M, p_err(R), γ) 一列"""
        assert len(table) == 2 * 2 * 5
        assert set(table["M"]) == {10, 50}

    def test_volume_nondecreasing_in_gamma(self, table):
        """測試 γ 增加時最佳量不減"""
        for _, group in table.groupby(["M", "p_err_level"]):
            assert self._nondecreasing(group.sort_values("gamma")["volume_or_inf"])

    def test_volume_nondecreasing_in_loss_level(self, table):
        """測試 p_err(R) 增加時最佳量不減"""
        for _, group in table.groupby(["M", "gamma"]):
            assert self._nondecreasing(group.sort_values("p_err_level")["volume_or_inf"])

    def test_volume_nondecreasing_in_neighbors(self, table):
        """測試 M 增加時最佳量不減"""
        for _, group in table.groupby(["p_err_level", "gamma"]):
            assert self._nondecreasing(group.sort_values("M")["volume_or_inf"])

    def test_period_nonincreasing_in_gamma(self, table):
        """測試 γ 增加時 Ñ 不增"""
        for _, group in table[table["feasible"].astype(bool)].groupby(["M", "p_err_level"]):
            periods = group.sort_values("gamma")["N_tilde"].tolist()
            assert periods == sorted(periods, reverse=True)

    def test_critical_gamma_nonincreasing_in_neighbors(self, table):
        """測試鄰居越多 γ_critical 越低"""
        for _, group in table.groupby("p_err_level"):
            per_m = group.groupby("M")["gamma_critical"].first().fillna(0.0).sort_index()
            critical = per_m.tolist()
            assert critical == sorted(critical, reverse=True)
        crowded = table[(table["M"] == 50) & (table["p_err_level"] == 0.1)]
        assert not crowded[crowded["gamma"] >= 0.003]["feasible"].astype(bool).any()


class TestGammaCritical:
    """γ_critical 測試"""

    def test_largest_feasible(self):
        """測試取可行列的最大 γ"""
        rows = [
            {"gamma": 0.001, "feasible": True},
            {"gamma": 0.01, "feasible": True},
            {"gamma": 0.1, "feasible": False},
        ]
        assert gamma_critical(rows) == 0.01

    def test_none_when_all_infeasible(self):
        """測試全部不可行"""
        assert gamma_critical([{"gamma": 0.1, "feasible": False}]) is None


class TestBuildFigure:
    """圖表分派測試"""

    def test_compare_requires_load_axis(self, sample_experiment_dict):
        """測試比較圖缺少負載掃描軸"""
        config = ExperimentConfig.from_dict(sample_experiment_dict)
        with pytest.raises(ConfigError):
            build_figure(FigureId.COMPARE, config)

    def test_unknown_figure(self, sample_experiment_dict):
        """測試未知圖表代號"""
        config = ExperimentConfig.from_dict(sample_experiment_dict)
        with pytest.raises(ValueError):
            build_figure("fig9", config)


@pytest.mark.slow
class TestCompareAcceptance:
    """R=200 的策略比較驗收測試"""

    def test_incremental_at_most_half(self):
        """測試負載 ≥ 0.3 時增量最佳量不超過累積的一半"""
        config = ExperimentConfig.from_yaml("config/experiments/compare.yaml")
        data = config.to_dict()
        data["run"].update({"horizon": 30000, "runs": 3})
        data["sweep"]["values"] = [0.3, 1.0]
        config = ExperimentConfig.from_dict(data)

        table = build_figure(FigureId.COMPARE, config, workers=1)
        for load, group in table.groupby("load"):
            volumes = dict(zip(group["strategy"], group["volume"]))
            assert volumes["incremental"] <= 0.5 * volumes["cumulative"]
