"""
Pytest configuration and shared fixtures for trackguard tests
"""

import os
from pathlib import Path

import numpy as np
import pytest
import yaml

from config.base import GeneratorConfig, PreprocessConfig, TrainConfig
from src.trackguard.core.services.preprocess_service import preprocess_records
from src.trackguard.core.services.signal_generator import generate_record
from src.trackguard.infrastructure.ai.classifier import train

# 小型資料集：縮短紀錄長度讓單元測試在數秒內完成
SMALL_CLASSES = [2, 3, 10]


@pytest.fixture(scope="session", autouse=True)
def test_env():
    """測試環境變數（避免本機 .env 影響日誌等級）"""
    original = os.environ.get("TRACKGUARD_ENVIRONMENT")
    os.environ["TRACKGUARD_ENVIRONMENT"] = "testing"
    yield
    if original is None:
        os.environ.pop("TRACKGUARD_ENVIRONMENT", None)
    else:
        os.environ["TRACKGUARD_ENVIRONMENT"] = original


@pytest.fixture
def small_generator_config():
    """短紀錄的產生器配置"""
    return GeneratorConfig(
        nominal_lead_samples=200,
        anomaly_samples=800,
        nominal_tail_samples=100,
    )


@pytest.fixture
def small_preprocess_config():
    return PreprocessConfig(window_len=32, stride=16, smooth_radius=2)


@pytest.fixture(scope="session")
def small_trained_model():
    """以少量紀錄訓練的小模型（session 共用）"""
    generator = GeneratorConfig(
        nominal_lead_samples=200, anomaly_samples=800, nominal_tail_samples=100
    )
    preprocess = PreprocessConfig(window_len=32, stride=16, smooth_radius=2)
    records = [
        generate_record(label, generator, seed=100 * label + i)
        for label in SMALL_CLASSES
        for i in range(3)
    ]
    windows = preprocess_records(records, preprocess)
    config = TrainConfig(epochs=8, batch_size=32, hidden_layers=[16], learning_rate=0.05)
    model, log = train(windows, config, seed=7)
    return model, log, windows


def write_run_config(tmp_path: Path, overrides=None) -> Path:
    """寫出小型 pipeline 用的 YAML 配置"""
    data = {
        "seed": 11,
        "paths": {
            "data_dir": "data",
            "model_path": "model.json",
            "calib_path": "calibration.json",
            "report_dir": "report",
        },
        "generator": {
            "nominal_lead_samples": 200,
            "anomaly_samples": 800,
            "nominal_tail_samples": 100,
        },
        "dataset": {
            "records_per_class": 3,
            "nominal_records": 3,
            "classes": list(SMALL_CLASSES),
            "holdout_classes": [6],
            "holdout_records": 1,
        },
        "preprocess": {"window_len": 32, "stride": 16},
        "train": {"epochs": 5, "batch_size": 32, "hidden_layers": [16]},
        "conformal": {"alpha": 0.1},
    }
    for section, values in (overrides or {}).items():
        if isinstance(values, dict):
            data.setdefault(section, {}).update(values)
        else:
            data[section] = values
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    return path


@pytest.fixture
def run_config_path(tmp_path):
    return write_run_config(tmp_path)


@pytest.fixture
def run_config_factory(tmp_path):
    """依覆蓋值產生配置檔的工廠"""

    def factory(overrides=None):
        return write_run_config(tmp_path, overrides)

    return factory


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
