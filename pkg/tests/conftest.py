"""
Pytest 設定檔

提供共用的 fixtures 和測試設定。
"""

import shutil
import tempfile
from pathlib import Path

import pytest

from src.core.probability import ber_for_loss
from src.models.params import ScenarioParams

# 單一鏈路情境：R=1000、μ=0.01、V0=16 位元、p_err(R)=10%、γ=0.001
SINGLE_LINK_BER = ber_for_loss(0.1, 1000, 16)


@pytest.fixture
def temp_dir():
    """建立暫存目錄，測試結束後自動清理"""
    dir_path = tempfile.mkdtemp()
    yield Path(dir_path)
    shutil.rmtree(dir_path, ignore_errors=True)


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """每個測試使用獨立的快取目錄與單一工作行程"""
    from src.utils import cache, config

    monkeypatch.setenv("DISSEMINATION_CACHE_DIR", str(tmp_path / "stationary"))
    monkeypatch.setenv("DISSEMINATION_WORKERS", "1")
    monkeypatch.setenv("LOG_FILE", str(tmp_path / "logs" / "test.log"))
    config.reset_config()
    monkeypatch.setattr(cache, "_cache_instance", None)
    yield
    config.reset_config()


@pytest.fixture
def single_link_scenario():
    """負載 0.5 的單一鏈路情境"""
    return ScenarioParams.from_load(
        0.5,
        mu=0.01,
        capacity=1000,
        element_size=16,
        gamma=0.001,
        neighbors=(SINGLE_LINK_BER,),
        p_thresh=0.95,
    )


@pytest.fixture
def small_scenario():
    """R=2、λ=1、μ=0.5 的小情境，可手算"""
    return ScenarioParams(lam=1.0, mu=0.5, capacity=2, element_size=8, neighbors=(0.0,))


@pytest.fixture
def medium_scenario():
    """R=50 的中型情境，快速測試調校器與模擬器"""
    return ScenarioParams.from_load(
        0.8,
        mu=0.05,
        capacity=50,
        element_size=16,
        gamma=0.002,
        neighbors=(ber_for_loss(0.1, 50, 16),),
        p_thresh=0.9,
    )


@pytest.fixture
def sample_experiment_dict():
    """最小的實驗設定"""
    return {
        "scenario": {
            "load": 0.5,
            "mu": 0.05,
            "capacity": 50,
            "element_size": "2 bytes",
            "gamma": 0.002,
            "M": 1,
            "p_err_level": 0.1,
            "p_thresh": 0.9,
        },
        "protocol": {"strategy": "incremental", "mode": "exact"},
        "run": {"horizon": 4000, "warmup": 200, "runs": 2, "seed": 3},
    }


@pytest.fixture
def experiment_file(temp_dir, sample_experiment_dict):
    """寫入暫存目錄的實驗檔"""
    import yaml

    path = temp_dir / "experiment.yaml"
    path.write_text(yaml.safe_dump(sample_experiment_dict, allow_unicode=True), encoding="utf-8")
    return path
