"""
模型檔與訓練紀錄的持久化

模型檔為 JSON，浮點數以 repr 格式寫出（可逐位元還原），欄位說明見 docs/file_formats.md。
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

from src.trackguard.infrastructure.ai.classifier import (
    MODEL_VERSION,
    Activation,
    ClassifierModel,
    LayerSpec,
    TrainingLog,
)
from src.trackguard.utils.exceptions import (
    ArtifactIOError,
    DataFormatError,
    DomainError,
    ModelVersionError,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def model_to_dict(model: ClassifierModel) -> Dict[str, Any]:
    return {
        "version": model.version,
        "rng_seed": model.rng_seed,
        "label_ids": list(model.label_ids),
        "input_dim": model.input_dim,
        "num_classes": model.num_classes,
        "metadata": model.metadata,
        "layers": [
            {
                "in": spec.in_dim,
                "out": spec.out_dim,
                "activation": spec.activation.value,
                "weights": w.tolist(),
                "bias": b.tolist(),
            }
            for spec, w, b in zip(model.arch, model.weights, model.biases)
        ],
    }


def _require(data: Dict[str, Any], key: str, path: str, prefix: str = "") -> Any:
    if not isinstance(data, dict) or key not in data:
        raise DataFormatError("missing field", path, field=f"{prefix}{key}")
    return data[key]


def model_from_dict(data: Dict[str, Any], path: str = "<memory>") -> ClassifierModel:
    """由 JSON 結構還原模型，錯誤訊息指出欄位"""
    version = _require(data, "version", path)
    if version != MODEL_VERSION:
        raise ModelVersionError(
            f"expected {MODEL_VERSION}, got {version!r}", path, field="version"
        )

    layers = _require(data, "layers", path)
    if not isinstance(layers, list) or not layers:
        raise DataFormatError("expected a non-empty list", path, field="layers")

    arch, weights, biases = [], [], []
    for k, layer in enumerate(layers):
        prefix = f"layers[{k}]."
        try:
            spec = LayerSpec(
                int(_require(layer, "in", path, prefix)),
                int(_require(layer, "out", path, prefix)),
                Activation(_require(layer, "activation", path, prefix)),
            )
        except ValueError as e:
            raise DataFormatError(str(e), path, field=f"{prefix}activation")
        w = np.asarray(_require(layer, "weights", path, prefix), dtype=np.float64)
        b = np.asarray(_require(layer, "bias", path, prefix), dtype=np.float64)
        if w.shape != (spec.in_dim, spec.out_dim):
            raise DataFormatError(
                f"shape {w.shape} != ({spec.in_dim}, {spec.out_dim})",
                path,
                field=f"{prefix}weights",
            )
        if b.shape != (spec.out_dim,):
            raise DataFormatError(f"shape {b.shape} != ({spec.out_dim},)", path, field=f"{prefix}bias")
        arch.append(spec)
        weights.append(w)
        biases.append(b)

    try:
        return ClassifierModel(
            arch=arch,
            weights=weights,
            biases=biases,
            label_ids=tuple(_require(data, "label_ids", path)),
            rng_seed=int(_require(data, "rng_seed", path)),
            version=version,
            metadata=dict(data.get("metadata") or {}),
        )
    except (DomainError, TypeError, ValueError) as e:
        raise DataFormatError(str(e), path)


def save_model(model: ClassifierModel, path: PathLike) -> Path:
    """寫出模型檔"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(model_to_dict(model)) + "\n", encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write model ({e.strerror})")
    logger.info("Saved model to %s", path)
    return path


def load_model(path: PathLike) -> ClassifierModel:
    """
    載入模型檔

    Raises:
        ArtifactIOError: 檔案不存在或無法讀取
        ModelVersionError: 版本標記不符
        DataFormatError: 內容毀損或缺欄位
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot read model ({e.strerror})")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"corrupt model file ({e.msg})", str(path), e.lineno)
    if not isinstance(data, dict):
        raise DataFormatError("model file must hold a JSON object", str(path))
    return model_from_dict(data, str(path))


def write_training_log(log: TrainingLog, path: PathLike) -> Path:
    """訓練紀錄 CSV：epoch,train_loss,holdout_accuracy"""
    path = Path(path)
    frame = pd.DataFrame(
        [(e.epoch, e.train_loss, e.holdout_accuracy) for e in log.epochs],
        columns=["epoch", "train_loss", "holdout_accuracy"],
    )
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%r")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write training log ({e.strerror})")
    return path
