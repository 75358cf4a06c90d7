"""
前處理服務

denoise → slide_windows → normalize。全部是無狀態的純函數。
"""

import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np

from config.base import LabelRule, PreprocessConfig
from src.trackguard.core.models.signal import NOMINAL_LABEL, SignalRecord
from src.trackguard.core.models.window import PulseWindow
from src.trackguard.utils.exceptions import DomainError

logger = logging.getLogger(__name__)


def denoise(channel: Sequence[float], smooth_radius: int) -> np.ndarray:
    """
    置中移動平均，邊界處縮小核心至可用的取樣點

    Args:
        channel: 取樣向量
        smooth_radius: 半徑，0 為恆等

    Returns:
        與輸入等長的平滑向量
    """
    x = np.asarray(channel, dtype=np.float64)
    if smooth_radius < 0:
        raise DomainError("smooth_radius must be >= 0")
    if smooth_radius == 0 or x.size == 0:
        return x.copy()

    kernel = np.ones(2 * smooth_radius + 1, dtype=np.float64)
    sums = np.convolve(x, kernel, mode="same")
    counts = np.convolve(np.ones_like(x), kernel, mode="same")
    return sums / counts


def window_starts(length: int, window_len: int, stride: int) -> range:
    """視窗起點 0, stride, 2·stride, …（最後一個完整視窗為止）"""
    if window_len > length:
        raise DomainError(f"window_len {window_len} exceeds record length {length}")
    return range(0, length - window_len + 1, stride)


def _phase_label(record: SignalRecord, center: int) -> int:
    if record.is_nominal:
        return NOMINAL_LABEL
    return record.label if record.onset_index <= center < record.critical_index else NOMINAL_LABEL


def _majority_label(record: SignalRecord, start: int, window_len: int) -> int:
    # 異常段樣本數過半才算異常；平手以中心規則決定
    if record.is_nominal:
        return NOMINAL_LABEL
    lo = max(start, record.onset_index)
    hi = min(start + window_len, record.critical_index)
    inside = max(0, hi - lo)
    if inside * 2 > window_len:
        return record.label
    if inside * 2 < window_len:
        return NOMINAL_LABEL
    return _phase_label(record, start + window_len // 2)


def _stage_fraction(record: SignalRecord, center: int) -> float:
    fraction = (center - record.onset_index) / (record.critical_index - record.onset_index)
    return float(min(1.0, max(0.0, fraction)))


def slide_windows(
    record: SignalRecord,
    config: PreprocessConfig,
    source_id: Optional[str] = None,
) -> List[PulseWindow]:
    """
    以固定長度與步長切出重疊視窗並標記

    Args:
        record: 來源紀錄（視窗取自已傳入的樣本，不自動平滑）
        config: 前處理配置
        source_id: 來源識別碼，預設為 record.record_id()

    Returns:
        依 start_index 排序的視窗

    Raises:
        DomainError: window_len 大於紀錄長度
    """
    source_id = source_id or record.record_id()
    length = config.window_len
    windows = []
    for start in window_starts(len(record), length, config.stride):
        center = start + length // 2
        if config.label_rule == LabelRule.MAJORITY_PHASE:
            label = _majority_label(record, start, length)
        else:
            label = _phase_label(record, center)
        windows.append(
            PulseWindow(
                cat=record.cat[start : start + length],
                cal=record.cal[start : start + length],
                source_id=source_id,
                start_index=start,
                label=label,
                stage_fraction=None if label == NOMINAL_LABEL else _stage_fraction(record, center),
            )
        )
    return windows


def _standardize(x: np.ndarray) -> np.ndarray:
    if np.ptp(x) == 0:
        return np.zeros_like(x)
    centered = x - x.mean()
    return centered / centered.std()


def normalize(window: PulseWindow) -> PulseWindow:
    """每個通道各自減平均、除以母體標準差；常數通道輸出全零"""
    return window.with_channels(
        _standardize(window.cat), _standardize(window.cal), normalized=True
    )


def smooth_record(record: SignalRecord, smooth_radius: int) -> SignalRecord:
    """回傳兩通道皆平滑後的紀錄副本"""
    return SignalRecord(
        sample_rate=record.sample_rate,
        cat=denoise(record.cat, smooth_radius),
        cal=denoise(record.cal, smooth_radius),
        label=record.label,
        seed=record.seed,
        onset_index=record.onset_index,
        critical_index=record.critical_index,
        recovery_index=record.recovery_index,
    )


def preprocess_record(
    record: SignalRecord,
    config: PreprocessConfig,
    source_id: Optional[str] = None,
) -> List[PulseWindow]:
    """完整前處理流程：平滑、切窗、正規化"""
    smoothed = smooth_record(record, config.smooth_radius)
    return [normalize(w) for w in slide_windows(smoothed, config, source_id)]


def preprocess_records(
    records: Iterable[SignalRecord],
    config: PreprocessConfig,
    source_ids: Optional[Sequence[str]] = None,
) -> List[PulseWindow]:
    """多筆紀錄前處理，輸出依 (source_id, start_index) 排序"""
    records = list(records)
    ids = list(source_ids) if source_ids is not None else [r.record_id() for r in records]
    if len(ids) != len(records):
        raise DomainError("source_ids and records differ in length")

    windows: List[PulseWindow] = []
    for record, source_id in zip(records, ids):
        windows.extend(preprocess_record(record, config, source_id))
    windows.sort(key=lambda w: (w.source_id, w.start_index))
    logger.debug("Preprocessed %d records into %d windows", len(records), len(windows))
    return windows
