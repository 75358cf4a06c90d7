"""核心資料模型"""

from .conformal import CalibrationResult, PredictionSet
from .evaluation import ConfusionMatrix, EarlinessEntry, EarlinessReport
from .signal import (
    ANOMALY_CATALOG,
    NOMINAL_LABEL,
    AnomalyClass,
    ChannelScope,
    EnvelopeKind,
    SignalRecord,
    get_anomaly_class,
    label_name,
    parse_label_name,
)
from .window import PulseWindow, stack_windows, window_labels

__all__ = [
    "ANOMALY_CATALOG",
    "NOMINAL_LABEL",
    "AnomalyClass",
    "ChannelScope",
    "EnvelopeKind",
    "SignalRecord",
    "get_anomaly_class",
    "label_name",
    "parse_label_name",
    "PulseWindow",
    "stack_windows",
    "window_labels",
    "CalibrationResult",
    "PredictionSet",
    "ConfusionMatrix",
    "EarlinessEntry",
    "EarlinessReport",
]
