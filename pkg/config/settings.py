"""配置工廠和設定管理

提供配置檔（YAML）載入、驗證、序列化與環境特定設定的統一入口。
"""

import dataclasses
import logging
import os
import typing
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv

from src.trackguard.utils.exceptions import ArtifactIOError, ConfigurationError

from .base import (
    Environment,
    LogLevel,
    PathsConfig,
    RunConfig,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ConfigurationError",
    "parse_config",
    "serialize_config",
    "load_config",
    "dump_config_yaml",
    "get_config_summary",
]

_NoneType = type(None)


def _type_name(tp: Any) -> str:
    """型別的人類可讀名稱（用於錯誤訊息）"""
    origin = typing.get_origin(tp)
    if origin is Union:
        args = [a for a in typing.get_args(tp) if a is not _NoneType]
        return f"optional {_type_name(args[0])}"
    if origin in (list, tuple):
        args = typing.get_args(tp)
        inner = _type_name(args[0]) if args else "any"
        return f"list of {inner}"
    if isinstance(tp, type) and issubclass(tp, Enum):
        return "one of " + "/".join(str(m.value) for m in tp)
    return getattr(tp, "__name__", str(tp))


def _coerce(value: Any, tp: Any, key: str) -> Any:
    """依欄位型別轉換並檢查 YAML 值"""
    origin = typing.get_origin(tp)

    if origin is Union:
        args = [a for a in typing.get_args(tp) if a is not _NoneType]
        if value is None:
            return None
        return _coerce(value, args[0], key)

    if origin in (list, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"{key}: expected {_type_name(tp)}")
        args = typing.get_args(tp)
        items = [_coerce(v, args[0], f"{key}[{i}]") for i, v in enumerate(value)]
        if origin is tuple:
            if len(args) > 1 and args[-1] is not Ellipsis and len(items) != len(args):
                raise ConfigurationError(
                    f"{key}: expected {len(args)} values, got {len(items)}"
                )
            return tuple(items)
        return items

    if isinstance(tp, type) and issubclass(tp, Enum):
        if isinstance(value, tp):
            return value
        try:
            return tp(value)
        except ValueError:
            raise ConfigurationError(f"{key}: expected {_type_name(tp)}, got {value!r}")

    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key}: expected bool, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{key}: expected int, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{key}: expected float, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{key}: expected str, got {value!r}")
        return value

    if dataclasses.is_dataclass(tp):
        return _build_section(tp, value, key)

    raise ConfigurationError(f"{key}: unsupported field type {tp!r}")


def _build_section(cls: Any, data: Any, prefix: str) -> Any:
    """以 dataclass 欄位描述建構一個配置區段，拒絕未知鍵"""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{prefix or 'config'}: expected a mapping")

    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls)}

    unknown = sorted(set(data) - set(known))
    if unknown:
        dotted = ", ".join(f"{prefix}.{k}" if prefix else str(k) for k in unknown)
        raise ConfigurationError(f"Unknown configuration key(s): {dotted}")

    kwargs = {}
    for name, f in known.items():
        key = f"{prefix}.{name}" if prefix else name
        if name in data:
            kwargs[name] = _coerce(data[name], hints[name], key)
        elif (
            f.default is dataclasses.MISSING
            and f.default_factory is dataclasses.MISSING
        ):
            raise ConfigurationError(
                f"Missing required configuration key: {key} "
                f"(expected {_type_name(hints[name])})"
            )

    try:
        return cls(**kwargs)
    except ValueError as e:
        raise ConfigurationError(f"{prefix or 'config'}: {e}")


def parse_config(data: Dict[str, Any]) -> RunConfig:
    """
    由字典建構 RunConfig

    Args:
        data: YAML 載入後的巢狀字典

    Returns:
        驗證過的執行配置

    Raises:
        ConfigurationError: 未知鍵、缺少鍵、型別錯誤或數值不合法
    """
    return _build_section(RunConfig, data, "")


def _to_plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _to_plain(v) for k, v in value.items()}
    return value


def serialize_config(config: RunConfig) -> Dict[str, Any]:
    """轉換為可寫回 YAML 的純字典（parse_config 的反函數）"""
    return _to_plain(dataclasses.asdict(config))


def dump_config_yaml(config: RunConfig) -> str:
    """輸出完整（含預設值）的 YAML 文字"""
    return yaml.safe_dump(serialize_config(config), sort_keys=False)


def _resolve_paths(paths: PathsConfig, base_dir: Path) -> PathsConfig:
    """相對路徑以配置檔所在目錄為基準"""
    resolved = {}
    for f in dataclasses.fields(paths):
        value = Path(getattr(paths, f.name))
        resolved[f.name] = str(value if value.is_absolute() else base_dir / value)
    return PathsConfig(**resolved)


def _apply_environment(config: RunConfig) -> RunConfig:
    """應用環境特定配置"""
    if config.environment == Environment.DEVELOPMENT:
        config.monitoring.log_level = LogLevel.DEBUG
    elif config.environment == Environment.TESTING:
        # 減少測試噪音
        config.monitoring.log_level = LogLevel.WARNING
    return config


def _apply_env_overrides(config: RunConfig) -> RunConfig:
    """環境變數覆蓋（TRACKGUARD_ENVIRONMENT、TRACKGUARD_LOG_LEVEL）"""
    load_dotenv()

    env_name = os.getenv("TRACKGUARD_ENVIRONMENT")
    if env_name:
        try:
            config.environment = Environment(env_name.lower())
        except ValueError:
            raise ConfigurationError(f"Invalid TRACKGUARD_ENVIRONMENT: {env_name}")

    config = _apply_environment(config)

    level = os.getenv("TRACKGUARD_LOG_LEVEL")
    if level:
        try:
            config.monitoring.log_level = LogLevel(level.upper())
        except ValueError:
            raise ConfigurationError(f"Invalid TRACKGUARD_LOG_LEVEL: {level}")

    return config


def load_config(path: Union[str, Path], seed: Optional[int] = None) -> RunConfig:
    """
    載入配置檔

    Args:
        path: YAML 配置檔路徑
        seed: 命令列覆蓋的全域種子

    Returns:
        已驗證、已套用環境覆蓋的配置

    Raises:
        ArtifactIOError: 配置檔無法讀取
        ConfigurationError: 配置內容不合法
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot read config file ({e.strerror})")

    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{path}: invalid YAML ({e})")

    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(
            f"{path}: top level must be a mapping, got {type(data).__name__}"
        )

    if seed is not None:
        data = dict(data or {})
        data["seed"] = seed

    config = parse_config(data)
    config.paths = _resolve_paths(config.paths, path.parent.resolve())
    config = _apply_env_overrides(config)

    logger.debug("Loaded configuration from %s", path)
    return config


def get_config_summary(config: RunConfig) -> Dict[str, Any]:
    """
    獲取配置摘要

    Args:
        config: 配置實例

    Returns:
        配置摘要字典
    """
    return {
        "environment": config.environment.value,
        "seed": config.seed,
        "dataset": {
            "classes": list(config.dataset.classes),
            "records_per_class": config.dataset.records_per_class,
            "holdout_classes": list(config.dataset.holdout_classes),
        },
        "signal": {
            "record_length": config.generator.record_length,
            "noise_sigma": config.generator.noise_sigma,
            "severity_max": config.generator.severity_max,
        },
        "windows": {
            "window_len": config.preprocess.window_len,
            "stride": config.preprocess.stride,
        },
        "model": {
            "hidden_layers": list(config.train.hidden_layers),
            "epochs": config.train.epochs,
            "train_seed": config.train_seed,
        },
        "conformal": {
            "alpha": config.conformal.alpha,
            "score_method": config.conformal.score_method.value,
        },
        "paths": dataclasses.asdict(config.paths),
    }
