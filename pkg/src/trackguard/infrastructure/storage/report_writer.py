"""
報告檔輸出

所有 CSV 以 pandas 寫出，欄位順序固定；未定義的數值寫成空欄位。
summary.txt 為固定順序的 key=value 行，方便 diff。
"""

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from src.trackguard.core.models.evaluation import ConfusionMatrix, EarlinessReport
from src.trackguard.core.models.signal import label_name
from src.trackguard.utils.exceptions import ArtifactIOError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CONFUSION_FILE = "confusion_matrix.csv"
CONFUSION_NORMALIZED_FILE = "confusion_matrix_normalized.csv"
COVERAGE_FILE = "coverage.csv"
EARLINESS_FILE = "earliness.csv"
SET_SIZES_FILE = "set_sizes.csv"
STAGE_ACCURACY_FILE = "stage_accuracy.csv"
SUMMARY_FILE = "summary.txt"


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%r", na_rep="")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write report ({e.strerror})")
    return path


def confusion_frame(
    matrix: ConfusionMatrix, rows: Sequence[int], normalized: bool = False
) -> pd.DataFrame:
    """列為 rows 指定的真實類別，欄為所有預測類別"""
    values = matrix.normalized() if normalized else matrix.counts
    index = {label: i for i, label in enumerate(matrix.label_ids)}
    frame = pd.DataFrame(
        [values[index[label]] for label in rows],
        columns=matrix.names(),
    )
    frame.insert(0, "true", [label_name(label) for label in rows])
    return frame


def write_confusion(
    matrix: ConfusionMatrix, rows: Sequence[int], report_dir: PathLike
) -> Tuple[Path, Path]:
    report_dir = Path(report_dir)
    return (
        _write_frame(confusion_frame(matrix, rows), report_dir / CONFUSION_FILE),
        _write_frame(
            confusion_frame(matrix, rows, normalized=True),
            report_dir / CONFUSION_NORMALIZED_FILE,
        ),
    )


def write_coverage(
    per_class: Sequence[Tuple[int, Optional[float], int]],
    marginal: float,
    average_size: float,
    n_total: int,
    report_dir: PathLike,
) -> Path:
    """class,coverage,n；最後兩列為 marginal 與 average_set_size"""
    rows: List[Tuple[str, Optional[float], int]] = [
        (label_name(label), coverage, n) for label, coverage, n in per_class
    ]
    rows.append(("marginal", marginal, n_total))
    rows.append(("average_set_size", average_size, n_total))
    frame = pd.DataFrame(rows, columns=["class", "coverage", "n"])
    return _write_frame(frame, Path(report_dir) / COVERAGE_FILE)


def write_earliness(report: EarlinessReport, report_dir: PathLike) -> Path:
    frame = pd.DataFrame(
        [
            (
                e.record_id,
                label_name(e.label),
                e.method,
                e.first_detection_index,
                e.earliness_percent,
                e.premature,
            )
            for e in report.entries
        ],
        columns=[
            "record_id",
            "class",
            "method",
            "first_detection_index",
            "earliness_percent",
            "premature",
        ],
    )
    # 保持整數欄位不被轉成浮點
    frame["first_detection_index"] = frame["first_detection_index"].astype("Int64")
    return _write_frame(frame, Path(report_dir) / EARLINESS_FILE)


def write_set_sizes(histogram: Dict[int, int], report_dir: PathLike) -> Path:
    frame = pd.DataFrame(sorted(histogram.items()), columns=["set_size", "count"])
    return _write_frame(frame, Path(report_dir) / SET_SIZES_FILE)


def write_stage_accuracy(bins: Sequence[Any], report_dir: PathLike) -> Path:
    frame = pd.DataFrame(
        [(b.lower, b.upper, b.n, b.accuracy) for b in bins],
        columns=["stage_lower", "stage_upper", "n", "accuracy"],
    )
    return _write_frame(frame, Path(report_dir) / STAGE_ACCURACY_FILE)


def format_value(value: Any) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "undefined"
        return repr(value)
    return str(value)


def write_summary(summary: Dict[str, Any], report_dir: PathLike) -> Path:
    """依插入順序寫出 key=value"""
    path = Path(report_dir) / SUMMARY_FILE
    lines = ["# trackguard report v1"]
    lines.extend(f"{key}={format_value(value)}" for key, value in summary.items())
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write summary ({e.strerror})")
    return path


def read_summary(path: PathLike) -> Dict[str, str]:
    """讀回 summary.txt（值保持字串）"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot read summary ({e.strerror})")
    result = {}
    for line in text.splitlines():
        if line and not line.startswith("#") and "=" in line:
            key, value = line.split("=", 1)
            result[key] = value
    return result
