"""
Unit tests for configuration loading - 配置載入測試
"""

from pathlib import Path

import pytest
import yaml

from config.base import (
    DetectionMode,
    Environment,
    LabelRule,
    LogLevel,
    RunConfig,
    ScoreMethod,
)
from config.settings import (
    dump_config_yaml,
    get_config_summary,
    load_config,
    parse_config,
    serialize_config,
)
from src.trackguard.utils.exceptions import ArtifactIOError, ConfigurationError

DEFAULT_CONFIG = Path(__file__).resolve().parents[2] / "config" / "default.yaml"

PATHS = {"data_dir": "d", "model_path": "m.json", "calib_path": "c.json", "report_dir": "r"}


class TestParseConfig:
    """parse_config 測試"""

    @pytest.mark.unit
    def test_minimal_config_fills_defaults(self):
        config = parse_config({"paths": PATHS})
        assert isinstance(config, RunConfig)
        assert config.seed == 42
        assert config.conformal.alpha == 0.01
        assert config.conformal.score_method == ScoreMethod.ONE_MINUS_TRUE_PROB
        assert config.preprocess.label_rule == LabelRule.CENTER_PHASE
        assert config.evaluation.detection_mode == DetectionMode.SINGLETON
        assert config.train.split == (0.6, 0.2, 0.2)
        assert config.train_seed == 42

    @pytest.mark.unit
    def test_missing_paths_section(self):
        with pytest.raises(ConfigurationError, match="paths"):
            parse_config({"seed": 1})

    @pytest.mark.unit
    def test_missing_required_key_names_type(self):
        paths = dict(PATHS)
        del paths["calib_path"]
        with pytest.raises(ConfigurationError, match=r"paths\.calib_path \(expected str\)"):
            parse_config({"paths": paths})

    @pytest.mark.unit
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError, match="train.epoch"):
            parse_config({"paths": PATHS, "train": {"epoch": 3}})

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "section,values,message",
        [
            ("train", {"epochs": "ten"}, "train.epochs: expected int"),
            ("train", {"hidden_layers": 64}, "train.hidden_layers: expected list of int"),
            ("conformal", {"score_method": "raps"}, "conformal.score_method"),
            ("evaluation", {"include_nominal": "yes"}, "expected bool"),
            ("generator", {"noise_sigma": True}, "expected float"),
        ],
    )
    def test_type_errors(self, section, values, message):
        with pytest.raises(ConfigurationError, match=message):
            parse_config({"paths": PATHS, section: values})

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "section,values",
        [
            ("conformal", {"alpha": 1.0}),
            ("train", {"split": [0.5, 0.2, 0.2]}),
            ("train", {"split": [0.8, 0.2]}),
            ("generator", {"carrier_freq": 5000.0}),
            ("preprocess", {"window_len": 16, "stride": 32}),
            ("dataset", {"classes": [1, 6], "holdout_classes": [6]}),
            ("evaluation", {"m": 0}),
        ],
    )
    def test_invalid_values(self, section, values):
        with pytest.raises(ConfigurationError):
            parse_config({"paths": PATHS, section: values})

    @pytest.mark.unit
    def test_int_accepted_for_float(self):
        config = parse_config({"paths": PATHS, "evaluation": {"k": 3}})
        assert config.evaluation.k == 3.0
        assert isinstance(config.evaluation.k, float)

    @pytest.mark.unit
    def test_serialize_round_trip(self):
        config = parse_config(
            {"paths": PATHS, "train": {"seed": 7, "hidden_layers": [8]}, "seed": 3}
        )
        data = yaml.safe_load(dump_config_yaml(config))
        assert parse_config(data) == config
        assert serialize_config(config)["train"]["split"] == [0.6, 0.2, 0.2]
        assert config.train_seed == 7


class TestLoadConfig:
    """load_config 測試"""

    @pytest.mark.unit
    def test_bundled_default(self):
        config = load_config(DEFAULT_CONFIG)
        assert config.dataset.classes == [1, 2, 3, 4, 5, 7, 8, 9, 10, 11]
        assert config.dataset.holdout_classes == [6]
        assert config.train.l2 == pytest.approx(1e-4)
        assert config.train.seed is None
        assert Path(config.paths.data_dir).is_absolute()

    @pytest.mark.unit
    def test_relative_paths_resolved_against_config_dir(self, run_config_path):
        config = load_config(run_config_path)
        base = run_config_path.parent.resolve()
        assert Path(config.paths.data_dir) == base / "data"
        assert Path(config.paths.model_path) == base / "model.json"

    @pytest.mark.unit
    def test_seed_override(self, run_config_path):
        assert load_config(run_config_path).seed == 11
        assert load_config(run_config_path, seed=99).seed == 99

    @pytest.mark.unit
    def test_testing_environment_quiets_logs(self, run_config_path):
        config = load_config(run_config_path)
        assert config.environment == Environment.TESTING
        assert config.monitoring.log_level == LogLevel.WARNING

    @pytest.mark.unit
    def test_log_level_env_override(self, run_config_path, monkeypatch):
        monkeypatch.setenv("TRACKGUARD_LOG_LEVEL", "error")
        assert load_config(run_config_path).monitoring.log_level == LogLevel.ERROR

    @pytest.mark.unit
    def test_invalid_environment(self, run_config_path, monkeypatch):
        monkeypatch.setenv("TRACKGUARD_ENVIRONMENT", "staging")
        with pytest.raises(ConfigurationError):
            load_config(run_config_path)

    @pytest.mark.unit
    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            load_config(tmp_path / "absent.yaml")

    @pytest.mark.unit
    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("paths: [unclosed", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_config(path)

    @pytest.mark.unit
    @pytest.mark.parametrize("text", ["- paths\n- seed\n", "42\n", "just a string\n"])
    @pytest.mark.parametrize("seed", [None, 7])
    def test_non_mapping_top_level(self, tmp_path, text, seed):
        path = tmp_path / "list.yaml"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ConfigurationError, match="mapping"):
            load_config(path, seed=seed)

    @pytest.mark.unit
    def test_summary(self, run_config_path):
        summary = get_config_summary(load_config(run_config_path))
        assert summary["environment"] == "testing"
        assert summary["signal"]["record_length"] == 1100
        assert summary["model"]["train_seed"] == 11
