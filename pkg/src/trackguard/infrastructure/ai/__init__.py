"""分類器（numpy 實作）"""

from .classifier import (
    MODEL_VERSION,
    Activation,
    ClassifierModel,
    LayerSpec,
    TrainingLog,
    forward,
    gradient_check,
    init_model,
    loss_and_gradients,
    predict,
    predict_proba,
    softmax,
    train,
)

__all__ = [
    "MODEL_VERSION",
    "Activation",
    "ClassifierModel",
    "LayerSpec",
    "TrainingLog",
    "forward",
    "gradient_check",
    "init_model",
    "loss_and_gradients",
    "predict",
    "predict_proba",
    "softmax",
    "train",
]
