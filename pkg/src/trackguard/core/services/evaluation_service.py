"""
評估服務

混淆矩陣與準確率、傳統門檻基準偵測、模型首次偵測與早期度。
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from config.base import DetectionMode, PreprocessConfig
from src.trackguard.core.models.conformal import CalibrationResult
from src.trackguard.core.models.evaluation import (
    ConfusionMatrix,
    EarlinessEntry,
    EarlinessReport,
)
from src.trackguard.core.models.signal import NOMINAL_LABEL, SignalRecord
from src.trackguard.core.models.window import PulseWindow
from src.trackguard.core.services.conformal_service import predict_sets
from src.trackguard.core.services.preprocess_service import (
    preprocess_record,
    window_starts,
)
from src.trackguard.infrastructure.ai.classifier import (
    ClassifierModel,
    argmax_index,
    predict_proba,
)
from src.trackguard.utils.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

METHOD_MODEL = "model"
METHOD_THRESHOLD = "threshold"

# 估計正常統計量所需的最少前段取樣數
MIN_NOMINAL_SAMPLES = 30


def confusion_from_labels(
    y_true: Sequence[int], y_pred: Sequence[int], label_ids: Sequence[int]
) -> ConfusionMatrix:
    """由標籤序列建立混淆矩陣（列 = 真實，欄 = 預測）"""
    known = set(label_ids)
    for label in list(y_true) + list(y_pred):
        if label not in known:
            raise DomainError(f"label {label} is not one of {sorted(known)}")
    counts = confusion_matrix(list(y_true), list(y_pred), labels=list(label_ids))
    return ConfusionMatrix(counts=counts.astype(np.int64), label_ids=tuple(label_ids))


def evaluate_classifier(
    model: ClassifierModel, windows: Sequence[PulseWindow]
) -> Tuple[ConfusionMatrix, float]:
    """
    測試集上的混淆矩陣與整體準確率

    Raises:
        DomainError: 測試集為空或含模型沒有的標籤
    """
    if not windows:
        raise DomainError("test set is empty")
    y_true = [w.label for w in windows]
    probs = predict_proba(model, windows)
    y_pred = [model.label_ids[int(i)] for i in argmax_index(probs)]
    matrix = confusion_from_labels(y_true, y_pred, model.label_ids)
    return matrix, matrix.accuracy


@dataclass(frozen=True)
class NominalStats:
    """每個通道的正常平均與標準差（依序 cat, cal）"""

    mean: np.ndarray
    sigma: np.ndarray
    n_samples: int


def nominal_stats(record: SignalRecord, lead_samples: Optional[int] = None) -> NominalStats:
    """
    以紀錄前段正常訊號估計每個通道的平均與逐點標準差

    Args:
        record: 紀錄
        lead_samples: 前段長度，預設為 onset_index（正常紀錄則為全長）

    Raises:
        ConfigurationError: 前段少於 30 個取樣
    """
    if lead_samples is None:
        lead_samples = len(record) if record.is_nominal else record.onset_index
    if lead_samples < MIN_NOMINAL_SAMPLES:
        raise ConfigurationError(
            f"nominal lead of {lead_samples} samples is too short "
            f"(need at least {MIN_NOMINAL_SAMPLES})"
        )
    lead = np.vstack([record.cat[:lead_samples], record.cal[:lead_samples]])
    return NominalStats(
        mean=lead.mean(axis=1), sigma=lead.std(axis=1, ddof=1), n_samples=lead_samples
    )


def first_run(hits: Sequence[bool], m: int) -> Optional[int]:
    """第一段連續 m 個 True 的起點"""
    if m < 1:
        raise DomainError("persistence count m must be >= 1")
    run = 0
    for i, hit in enumerate(hits):
        run = run + 1 if hit else 0
        if run == m:
            return i - m + 1
    return None


def overlaps_from(start: int, window_len: int, search_from: Optional[int]) -> bool:
    """視窗 [start, start + window_len) 是否含有 search_from 之後（含）的取樣"""
    return search_from is None or start + window_len > search_from


def first_run_from(
    hits: Sequence[bool],
    starts: Sequence[int],
    window_len: int,
    m: int,
    search_from: Optional[int] = None,
) -> Optional[int]:
    """
    只在與 search_from 重疊的視窗中找第一段連續 m 個命中

    完全落在 search_from 之前的命中視為誤報，不列入偵測。
    """
    eligible = [
        bool(hit) and overlaps_from(start, window_len, search_from)
        for hit, start in zip(hits, starts)
    ]
    early = first_run(hits, m)
    first = first_run(eligible, m)
    if early is not None and early != first:
        logger.debug(
            "Ignoring false alarm run at window %d before sample %s", early, search_from
        )
    return first


def _window_means(x: np.ndarray, starts: range, window_len: int) -> np.ndarray:
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.asarray(starts)
    return (csum[idx + window_len] - csum[idx]) / window_len


def threshold_baseline_detect(
    record: SignalRecord,
    stats: NominalStats,
    k: float,
    m: int,
    window_len: int,
    stride: int,
    search_from: Optional[int] = None,
) -> Optional[int]:
    """
    傳統門檻基準：原始訊號視窗平均偏離正常平均超過 k·σ

    任一通道偏離即算命中，需連續 m 個視窗。給定 search_from 時，
    只計入含有該取樣之後資料的視窗。

    Returns:
        該段第一個視窗的中心索引，未觸發則為 None
    """
    starts = window_starts(len(record), window_len, stride)
    hits = np.zeros(len(starts), dtype=bool)
    for c, channel in enumerate((record.cat, record.cal)):
        means = _window_means(channel, starts, window_len)
        hits |= np.abs(means - stats.mean[c]) > k * stats.sigma[c]
    first = first_run_from(hits, starts, window_len, m, search_from)
    return None if first is None else starts[first] + window_len // 2


def window_hits(
    model: ClassifierModel,
    calib: CalibrationResult,
    windows: Sequence[PulseWindow],
    label: int,
    mode: DetectionMode = DetectionMode.SINGLETON,
) -> List[bool]:
    """每個視窗是否正確辨識為 label"""
    if not windows:
        return []
    probs = predict_proba(model, windows)
    if mode == DetectionMode.ARGMAX:
        return [model.label_ids[int(i)] == label for i in argmax_index(probs)]
    target = frozenset([label])
    return [s.labels == target for s in predict_sets(probs, calib, model.label_ids)]


def model_first_detection(
    model: ClassifierModel,
    calib: CalibrationResult,
    record: SignalRecord,
    m: int,
    config: PreprocessConfig,
    mode: DetectionMode = DetectionMode.SINGLETON,
) -> Optional[int]:
    """
    模型首次偵測：第一段連續 m 個視窗的預測集合恰為 {真實類別}

    從第一個含 onset 之後取樣的視窗開始掃描，完全落在正常前段的命中是誤報。
    只接受第一個視窗中心早於 critical_index 的段落。

    Returns:
        該段第一個視窗的中心索引或 None
    """
    if m < 1:
        raise DomainError("persistence count m must be >= 1")
    if record.is_nominal:
        raise DomainError("model detection needs an anomaly record")
    model.label_index(record.label)

    windows = preprocess_record(record, config)
    hits = window_hits(model, calib, windows, record.label, mode)
    first = first_run_from(
        hits,
        [w.start_index for w in windows],
        config.window_len,
        m,
        record.onset_index,
    )
    if first is None or windows[first].center_index >= record.critical_index:
        return None
    return windows[first].center_index


def earliness_percent(
    first_detection: Optional[int], onset: int, critical: int
) -> Optional[float]:
    """
    100·(first_detection − onset)/(critical − onset)

    偵測不在 [onset, critical) 內時回傳 None。
    """
    if onset >= critical:
        raise DomainError("onset must precede critical")
    if first_detection is None or not onset <= first_detection < critical:
        return None
    return 100.0 * (first_detection - onset) / (critical - onset)


def earliness_entry(
    record_id: str, record: SignalRecord, method: str, detection: Optional[int]
) -> EarlinessEntry:
    premature = detection is not None and detection < record.onset_index
    return EarlinessEntry(
        record_id=record_id,
        label=record.label,
        method=method,
        first_detection_index=detection,
        earliness_percent=earliness_percent(
            detection, record.onset_index, record.critical_index
        ),
        premature=premature,
    )


def build_earliness_report(
    records: Iterable[Tuple[str, SignalRecord]],
    model: ClassifierModel,
    calib: CalibrationResult,
    config: PreprocessConfig,
    k: float,
    m: int,
    mode: DetectionMode = DetectionMode.SINGLETON,
) -> EarlinessReport:
    """兩種方法對每筆異常紀錄的首次偵測，依 record id 排序"""
    report = EarlinessReport()
    for record_id, record in sorted(records, key=lambda item: item[0]):
        if record.is_nominal:
            continue
        detected = model_first_detection(model, calib, record, m, config, mode)
        baseline = threshold_baseline_detect(
            record,
            nominal_stats(record),
            k,
            m,
            config.window_len,
            config.stride,
            search_from=record.onset_index,
        )
        report.entries.append(earliness_entry(record_id, record, METHOD_MODEL, detected))
        report.entries.append(earliness_entry(record_id, record, METHOD_THRESHOLD, baseline))
        if detected is None:
            logger.warning("Model never identified %s before critical failure", record_id)
    return report


def dominance_violations(report: EarlinessReport) -> List[str]:
    """兩種方法都偵測到、但模型較晚的紀錄"""
    by_record = {}
    for entry in report.entries:
        by_record.setdefault(entry.record_id, {})[entry.method] = entry
    violations = []
    for record_id, methods in sorted(by_record.items()):
        model_entry = methods.get(METHOD_MODEL)
        base_entry = methods.get(METHOD_THRESHOLD)
        if model_entry is None or base_entry is None:
            continue
        if model_entry.earliness_percent is None or base_entry.earliness_percent is None:
            continue
        if model_entry.earliness_percent > base_entry.earliness_percent:
            violations.append(record_id)
    return violations


@dataclass(frozen=True)
class StageBin:
    lower: float
    upper: float
    n: int
    accuracy: Optional[float]


def stage_accuracy(
    model: ClassifierModel, windows: Sequence[PulseWindow], bins: int = 3
) -> List[StageBin]:
    """異常視窗依 stage_fraction 分箱的準確率（最後一箱含 1.0）"""
    if bins < 1:
        raise DomainError("bins must be >= 1")
    anomalous = [w for w in windows if w.label != NOMINAL_LABEL]
    edges = np.linspace(0.0, 1.0, bins + 1)
    if anomalous:
        probs = predict_proba(model, anomalous)
        correct = np.array(
            [model.label_ids[int(i)] == w.label for i, w in zip(argmax_index(probs), anomalous)]
        )
        fractions = np.array([w.stage_fraction for w in anomalous])
        which = np.minimum(np.searchsorted(edges, fractions, side="right") - 1, bins - 1)
    else:
        correct = np.zeros(0, dtype=bool)
        which = np.zeros(0, dtype=np.int64)

    result = []
    for b in range(bins):
        members = correct[which == b]
        result.append(
            StageBin(
                lower=float(edges[b]),
                upper=float(edges[b + 1]),
                n=int(members.size),
                accuracy=float(members.mean()) if members.size else None,
            )
        )
    return result
