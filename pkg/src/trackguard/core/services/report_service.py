"""
評估報告產生

run_report 讀取測試切分與保留類別，計算混淆矩陣、覆蓋率、集合大小、
階段準確率與早期度，並寫出報告檔。所有輸出只取決於輸入。
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from config.base import RunConfig
from src.trackguard.core.models.conformal import CalibrationResult, PredictionSet
from src.trackguard.core.models.dataset import DatasetManifest
from src.trackguard.core.models.evaluation import ConfusionMatrix, EarlinessReport
from src.trackguard.core.models.signal import NOMINAL_LABEL, get_anomaly_class
from src.trackguard.core.models.window import PulseWindow
from src.trackguard.core.services import conformal_service as conformal
from src.trackguard.core.services.dataset_service import (
    load_records,
    load_windows,
    split_records,
)
from src.trackguard.core.services.evaluation_service import (
    METHOD_MODEL,
    METHOD_THRESHOLD,
    build_earliness_report,
    dominance_violations,
    evaluate_classifier,
    stage_accuracy,
)
from src.trackguard.infrastructure.ai.classifier import ClassifierModel, predict_proba
from src.trackguard.infrastructure.storage import report_writer
from src.trackguard.utils.exceptions import DomainError

logger = logging.getLogger(__name__)


@dataclass
class ReportBundle:
    """run_report 的結果：摘要與輸出檔路徑"""

    summary: Dict[str, Any]
    confusion: ConfusionMatrix
    earliness: EarlinessReport
    files: Dict[str, Path] = field(default_factory=dict)


def _sets_for(
    model: ClassifierModel, calib: CalibrationResult, windows: List[PulseWindow]
) -> List[PredictionSet]:
    if not windows:
        return []
    return conformal.predict_sets(predict_proba(model, windows), calib, model.label_ids)


def _progressive_labels(labels) -> List[int]:
    return [
        label
        for label in labels
        if label != NOMINAL_LABEL and get_anomaly_class(label).envelope_kind.is_progressive
    ]


def _ratio(numerator: float, denominator: float) -> Optional[float]:
    if math.isnan(numerator) or math.isnan(denominator):
        return None
    if denominator == 0:
        return math.inf if numerator > 0 else None
    return numerator / denominator


def _min_recall(matrix: ConfusionMatrix, labels: List[int]) -> Optional[float]:
    """正規化對角線的最小值（略過未定義的列）"""
    diagonal = np.diag(matrix.normalized())
    values = [
        float(diagonal[matrix.label_ids.index(label)])
        for label in labels
        if not np.isnan(diagonal[matrix.label_ids.index(label)])
    ]
    return min(values) if values else None


def run_report(
    manifest: DatasetManifest,
    data_dir: Union[str, Path],
    model: ClassifierModel,
    calib: CalibrationResult,
    config: RunConfig,
    report_dir: Union[str, Path],
) -> ReportBundle:
    """
    產生評估報告

    Args:
        manifest: 資料集清單
        data_dir: 紀錄所在目錄
        model: 已訓練模型
        calib: 校準結果
        config: 執行配置（切分、前處理、評估參數）
        report_dir: 報告輸出目錄

    Returns:
        ReportBundle
    """
    evaluation = config.evaluation
    preprocess = config.preprocess

    splits = split_records(manifest.main_entries(), config.train.split, config.seed)
    test_entries = splits["test"]
    windows = load_windows(test_entries, data_dir, preprocess)
    if not windows:
        raise DomainError("test split produced no windows")

    # 混淆矩陣：預設只列異常類別的真實列
    scored = windows if evaluation.include_nominal else [
        w for w in windows if w.label != NOMINAL_LABEL
    ]
    matrix, accuracy = evaluate_classifier(model, scored)
    row_labels = [
        label
        for label in model.label_ids
        if evaluation.include_nominal or label != NOMINAL_LABEL
    ]

    # 覆蓋率在全部測試視窗上計算（與校準集可交換）
    sets = _sets_for(model, calib, windows)
    truth = [w.label for w in windows]
    per_class = conformal.class_conditional_coverage(sets, truth, row_labels)
    counts = {label: truth.count(label) for label in row_labels}
    marginal = conformal.marginal_coverage(sets, truth)
    avg_size = conformal.average_set_size(sets)
    histogram = conformal.set_size_histogram(sets)

    anomaly_sets = [s for s, w in zip(sets, windows) if w.label != NOMINAL_LABEL]
    in_dist_empty = conformal.empty_set_rate(anomaly_sets)

    # 保留類別（未知異常）只看異常段視窗
    holdout_windows = [
        w
        for w in load_windows(manifest.holdout_entries(), data_dir, preprocess)
        if w.label != NOMINAL_LABEL
    ]
    holdout_empty = conformal.empty_set_rate(_sets_for(model, calib, holdout_windows))

    bins = stage_accuracy(model, windows, evaluation.stage_bins)

    earliness = build_earliness_report(
        load_records(test_entries, data_dir),
        model,
        calib,
        preprocess,
        evaluation.k,
        evaluation.m,
        evaluation.detection_mode,
    )
    progressive = _progressive_labels(model.label_ids)
    violations = dominance_violations(earliness)

    summary: Dict[str, Any] = {
        "test_records": len(test_entries),
        "test_windows": len(windows),
        "scored_windows": len(scored),
        "accuracy": accuracy,
        "min_class_recall": _min_recall(matrix, row_labels),
        "alpha": calib.alpha,
        "q_hat": calib.q_hat,
        "n_cal": calib.n_cal,
        "score_method": calib.score_method,
        "saturated": calib.saturated,
        "marginal_coverage": marginal,
        "min_class_coverage": min(
            (c for c in per_class.values() if c is not None), default=None
        ),
        "average_set_size": avg_size,
        "in_distribution_empty_set_rate": in_dist_empty,
        "holdout_windows": len(holdout_windows),
        "holdout_empty_set_rate": holdout_empty,
        "empty_set_ratio": _ratio(holdout_empty, in_dist_empty),
        "detection_mode": evaluation.detection_mode.value,
        "k": evaluation.k,
        "m": evaluation.m,
        "model_earliness_mean": earliness.method_mean(METHOD_MODEL),
        "threshold_earliness_mean": earliness.method_mean(METHOD_THRESHOLD),
        "model_earliness_progressive_mean": earliness.method_mean(METHOD_MODEL, progressive),
        "threshold_earliness_progressive_mean": earliness.method_mean(
            METHOD_THRESHOLD, progressive
        ),
        "premature_detections": sum(1 for e in earliness.entries if e.premature),
        "dominance_violations": len(violations),
    }

    report_dir = Path(report_dir)
    confusion_path, normalized_path = report_writer.write_confusion(
        matrix, row_labels, report_dir
    )
    files = {
        "confusion_matrix": confusion_path,
        "confusion_matrix_normalized": normalized_path,
        "coverage": report_writer.write_coverage(
            [(label, per_class[label], counts[label]) for label in row_labels],
            marginal,
            avg_size,
            len(sets),
            report_dir,
        ),
        "earliness": report_writer.write_earliness(earliness, report_dir),
        "set_sizes": report_writer.write_set_sizes(histogram, report_dir),
        "stage_accuracy": report_writer.write_stage_accuracy(bins, report_dir),
        "summary": report_writer.write_summary(summary, report_dir),
    }

    logger.info(
        "Report: accuracy=%.4f coverage=%.4f avg_set_size=%.3f",
        accuracy,
        marginal,
        avg_size,
    )
    if violations:
        logger.warning("Model detected later than the threshold baseline on %s", violations)
    return ReportBundle(summary=summary, confusion=matrix, earliness=earliness, files=files)
