"""
從零實作的多層感知器分類器

全程 64-bit 浮點。初始化、洗牌與批次皆由種子決定，相同種子得到逐位元相同的參數。
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import log_softmax
from scipy.special import softmax as _scipy_softmax

from config.base import TrainConfig
from src.trackguard.core.models.window import PulseWindow, stack_windows
from src.trackguard.utils.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

MODEL_VERSION = "trackguard-model/1"

BatchLike = Union[np.ndarray, PulseWindow, Sequence[PulseWindow]]


class Activation(Enum):
    """層的激活函數"""

    RELU = "relu"
    IDENTITY = "identity"


@dataclass(frozen=True)
class LayerSpec:
    """Dense(in_dim, out_dim) 層描述"""

    in_dim: int
    out_dim: int
    activation: Activation = Activation.RELU


@dataclass
class ClassifierModel:
    """分層參數容器"""

    arch: List[LayerSpec]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    label_ids: Tuple[int, ...]
    rng_seed: int
    version: str = MODEL_VERSION
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.label_ids = tuple(int(label) for label in self.label_ids)
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]

        if not self.arch:
            raise DomainError("model needs at least one layer")
        if len(self.weights) != len(self.arch) or len(self.biases) != len(self.arch):
            raise DomainError("one weight matrix and bias vector per layer")
        if list(self.label_ids) != sorted(set(self.label_ids)):
            raise DomainError("label_ids must be unique and sorted")

        for k, (spec, w, b) in enumerate(zip(self.arch, self.weights, self.biases)):
            if k > 0 and spec.in_dim != self.arch[k - 1].out_dim:
                raise DomainError(f"layer {k} input does not chain with layer {k - 1}")
            if w.shape != (spec.in_dim, spec.out_dim) or b.shape != (spec.out_dim,):
                raise DomainError(f"layer {k} parameter shapes do not match its spec")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise DomainError(f"layer {k} has non-finite parameters")

        if self.arch[-1].activation != Activation.IDENTITY:
            raise DomainError("last layer must use the identity activation")
        if self.arch[-1].out_dim != len(self.label_ids):
            raise DomainError("last layer width must equal the number of classes")

    @property
    def input_dim(self) -> int:
        return self.arch[0].in_dim

    @property
    def num_classes(self) -> int:
        return len(self.label_ids)

    def label_index(self, label: int) -> int:
        try:
            return self.label_ids.index(label)
        except ValueError:
            raise DomainError(f"label {label} is not a model class")

    def copy(self) -> "ClassifierModel":
        return ClassifierModel(
            arch=list(self.arch),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            label_ids=self.label_ids,
            rng_seed=self.rng_seed,
            version=self.version,
            metadata=dict(self.metadata),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClassifierModel):
            return NotImplemented
        return (
            self.arch == other.arch
            and self.label_ids == other.label_ids
            and self.rng_seed == other.rng_seed
            and self.version == other.version
            and self.metadata == other.metadata
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )


@dataclass
class Gradients:
    """與模型參數同形狀的梯度"""

    weights: List[np.ndarray]
    biases: List[np.ndarray]


@dataclass(frozen=True)
class EpochStat:
    epoch: int
    train_loss: float
    holdout_accuracy: Optional[float]


@dataclass
class TrainingLog:
    """每個 epoch 的訓練損失與保留集準確率"""

    epochs: List[EpochStat] = field(default_factory=list)

    def losses(self) -> List[float]:
        return [e.train_loss for e in self.epochs]

    @property
    def final_accuracy(self) -> Optional[float]:
        return self.epochs[-1].holdout_accuracy if self.epochs else None


def build_architecture(
    input_dim: int, hidden_layers: Sequence[int], num_classes: int
) -> List[LayerSpec]:
    """Dense(ReLU) 隱藏層 + Dense(Identity) 輸出層"""
    widths = [input_dim] + list(hidden_layers)
    arch = [LayerSpec(a, b, Activation.RELU) for a, b in zip(widths[:-1], widths[1:])]
    arch.append(LayerSpec(widths[-1], num_classes, Activation.IDENTITY))
    return arch


def init_model(
    input_dim: int,
    hidden_layers: Sequence[int],
    label_ids: Sequence[int],
    seed: int,
) -> ClassifierModel:
    """He 式均勻初始化 ±sqrt(6/fan_in)，偏差為零"""
    label_ids = tuple(sorted(label_ids))
    arch = build_architecture(input_dim, hidden_layers, len(label_ids))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    weights, biases = [], []
    for spec in arch:
        limit = np.sqrt(6.0 / spec.in_dim)
        weights.append(rng.uniform(-limit, limit, size=(spec.in_dim, spec.out_dim)))
        biases.append(np.zeros(spec.out_dim, dtype=np.float64))
    return ClassifierModel(
        arch=arch, weights=weights, biases=biases, label_ids=label_ids, rng_seed=seed
    )


def as_batch(model: ClassifierModel, batch: BatchLike) -> np.ndarray:
    """把視窗或陣列轉成 [N x input_dim] 矩陣"""
    if isinstance(batch, PulseWindow):
        x = batch.flatten()[None, :]
    elif isinstance(batch, np.ndarray):
        x = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    else:
        x = stack_windows(list(batch))
    if x.ndim != 2 or (x.shape[0] and x.shape[1] != model.input_dim):
        raise DomainError(
            f"input dimension {x.shape[-1]} does not match model input {model.input_dim}"
        )
    return x


def _forward_cache(model: ClassifierModel, x: np.ndarray):
    activations = [x]
    pre_activations = []
    a = x
    for spec, w, b in zip(model.arch, model.weights, model.biases):
        z = a @ w + b
        pre_activations.append(z)
        a = np.maximum(z, 0.0) if spec.activation == Activation.RELU else z
        activations.append(a)
    return activations, pre_activations


def forward(model: ClassifierModel, batch: BatchLike) -> np.ndarray:
    """
    前向傳遞

    Returns:
        logits，形狀 [batch x num_classes]
    """
    x = as_batch(model, batch)
    activations, _ = _forward_cache(model, x)
    return activations[-1]


def softmax(logits: np.ndarray) -> np.ndarray:
    """沿最後一軸的 softmax（內部先減最大值）"""
    return _scipy_softmax(np.asarray(logits, dtype=np.float64), axis=-1)


def _check_labels(model: ClassifierModel, labels: Sequence[int]) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= model.num_classes):
        raise DomainError(f"label index outside [0, {model.num_classes})")
    return y


def loss_and_gradients(
    model: ClassifierModel,
    batch: BatchLike,
    labels: Sequence[int],
    l2: float = 0.0,
) -> Tuple[float, Gradients]:
    """
    平均交叉熵 + l2·‖W‖²/2 及其反向傳播梯度

    Args:
        model: 分類器
        batch: 輸入批次
        labels: 類別索引（0..num_classes-1，不是標籤編號）
        l2: 權重衰減係數（只作用於權重）

    Raises:
        DomainError: 索引越界或批次與標籤長度不符
    """
    x = as_batch(model, batch)
    y = _check_labels(model, labels)
    n = x.shape[0]
    if n == 0 or len(y) != n:
        raise DomainError("batch and labels must be non-empty and of equal length")

    activations, pre_activations = _forward_cache(model, x)
    logits = activations[-1]
    log_probs = log_softmax(logits, axis=1)
    rows = np.arange(n)

    loss = -float(np.mean(log_probs[rows, y]))
    if l2:
        loss += 0.5 * l2 * float(sum(np.sum(w * w) for w in model.weights))

    delta = np.exp(log_probs)
    delta[rows, y] -= 1.0
    delta /= n

    grad_w: List[np.ndarray] = [None] * len(model.arch)
    grad_b: List[np.ndarray] = [None] * len(model.arch)
    for k in range(len(model.arch) - 1, -1, -1):
        grad_w[k] = activations[k].T @ delta + l2 * model.weights[k]
        grad_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ model.weights[k].T
            if model.arch[k - 1].activation == Activation.RELU:
                delta = delta * (pre_activations[k - 1] > 0)

    return loss, Gradients(weights=grad_w, biases=grad_b)


def _loss_only(model, x, y, l2) -> float:
    logits = _forward_cache(model, x)[0][-1]
    loss = -float(np.mean(log_softmax(logits, axis=1)[np.arange(len(y)), y]))
    if l2:
        loss += 0.5 * l2 * float(sum(np.sum(w * w) for w in model.weights))
    return loss


def gradient_check(
    model: ClassifierModel,
    batch: BatchLike,
    labels: Sequence[int],
    l2: float = 0.0,
    h: float = 1e-5,
    floor: float = 1e-3,
) -> float:
    """
    解析梯度與中央差分的最大相對誤差

    相對誤差 = |a - n| / max(|a|, |n|, floor)。|a| 與 |n| 都小於 floor 的參數
    實際上比較的是絕對誤差 |a - n| / floor。

    Raises:
        DomainError: floor 不為正
    """
    if floor <= 0:
        raise DomainError("gradient check floor must be positive")
    x = as_batch(model, batch)
    y = _check_labels(model, labels)
    _, grads = loss_and_gradients(model, x, y, l2)
    probe = model.copy()

    worst = 0.0
    pairs = list(zip(probe.weights, grads.weights)) + list(zip(probe.biases, grads.biases))
    for param, analytic in pairs:
        for idx in np.ndindex(param.shape):
            original = param[idx]
            param[idx] = original + h
            plus = _loss_only(probe, x, y, l2)
            param[idx] = original - h
            minus = _loss_only(probe, x, y, l2)
            param[idx] = original
            numeric = (plus - minus) / (2.0 * h)
            a = float(analytic[idx])
            error = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, error)
    return worst


def predict_proba(model: ClassifierModel, batch: BatchLike) -> np.ndarray:
    """類別機率；單一視窗輸入回傳向量"""
    probs = softmax(forward(model, batch))
    if isinstance(batch, PulseWindow) or (isinstance(batch, np.ndarray) and batch.ndim == 1):
        return probs[0]
    return probs


def argmax_index(probs: np.ndarray) -> np.ndarray:
    """argmax，平手取最小索引（即最小標籤編號）"""
    return np.argmax(np.asarray(probs), axis=-1)


def predict(model: ClassifierModel, batch: BatchLike):
    """預測標籤編號；單一視窗回傳 int"""
    indices = argmax_index(predict_proba(model, batch))
    if np.ndim(indices) == 0:
        return model.label_ids[int(indices)]
    return [model.label_ids[int(i)] for i in indices]


def accuracy(model: ClassifierModel, x: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        return float("nan")
    return float(np.mean(argmax_index(softmax(forward(model, x))) == y))


def _encode(model_labels: Sequence[int], windows: Sequence[PulseWindow]) -> np.ndarray:
    lookup = {label: i for i, label in enumerate(model_labels)}
    try:
        return np.array([lookup[w.label] for w in windows], dtype=np.int64)
    except KeyError as e:
        raise DomainError(f"window label {e.args[0]} is not a model class")


def train(
    windows: Sequence[PulseWindow],
    config: TrainConfig,
    seed: Optional[int] = None,
    holdout: Sequence[PulseWindow] = (),
    label_ids: Optional[Sequence[int]] = None,
) -> Tuple[ClassifierModel, TrainingLog]:
    """
    小批次梯度下降訓練

    Args:
        windows: 已正規化的訓練視窗
        config: 訓練配置
        seed: 種子，未提供時使用 config.seed（再無則 0）
        holdout: 每個 epoch 計算準確率用的保留視窗
        label_ids: 模型類別；未提供時取訓練資料出現的標籤

    Returns:
        (模型, 訓練紀錄)

    Raises:
        ConfigurationError: 資料為空、類別少於 2 個或某類別沒有訓練樣本
    """
    if not windows:
        raise ConfigurationError("training set is empty")
    seed = seed if seed is not None else (config.seed if config.seed is not None else 0)

    present = sorted({w.label for w in windows})
    label_ids = tuple(sorted(label_ids)) if label_ids is not None else tuple(present)
    for label in label_ids:
        if label not in present:
            raise ConfigurationError(f"class {label} has no training windows")
    if len(label_ids) < 2:
        raise ConfigurationError("training needs at least 2 classes")

    x = stack_windows(windows)
    y = _encode(label_ids, windows)
    x_hold = stack_windows(holdout) if holdout else None
    y_hold = _encode(label_ids, holdout) if holdout else None

    model = init_model(x.shape[1], config.hidden_layers, label_ids, seed)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    log = TrainingLog()
    n = x.shape[0]

    logger.info(
        "Training %s on %d windows (%d classes), %d epochs",
        [spec.out_dim for spec in model.arch],
        n,
        model.num_classes,
        config.epochs,
    )

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = loss_and_gradients(model, x[idx], y[idx], config.l2)
            total += loss * len(idx)
            for k in range(len(model.arch)):
                model.weights[k] -= config.learning_rate * grads.weights[k]
                model.biases[k] -= config.learning_rate * grads.biases[k]

        hold_acc = accuracy(model, x_hold, y_hold) if x_hold is not None else None
        log.epochs.append(EpochStat(epoch, total / n, hold_acc))
        logger.info(
            "Epoch %d/%d - loss %.6f - holdout accuracy %s",
            epoch,
            config.epochs,
            total / n,
            "n/a" if hold_acc is None else f"{hold_acc:.4f}",
        )

    if not all(np.all(np.isfinite(w)) for w in model.weights):
        raise ConfigurationError("training diverged (non-finite weights); lower learning_rate")
    return model, log
