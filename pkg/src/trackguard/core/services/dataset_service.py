"""
資料集切分與載入

依紀錄（不是依視窗）切分 train/calibration/test，同一筆紀錄的視窗不會跨切分。
所有指令呼叫 split_records 時都得到相同結果。
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from config.base import PreprocessConfig
from src.trackguard.core.models.dataset import ManifestEntry
from src.trackguard.core.models.signal import SignalRecord, label_name
from src.trackguard.core.models.window import PulseWindow
from src.trackguard.core.services.preprocess_service import preprocess_records
from src.trackguard.infrastructure.storage.csv_store import load_entry
from src.trackguard.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "calibration", "test")


def _boundaries(n: int, split: Sequence[float]) -> Tuple[int, int]:
    b1 = int(round(n * split[0]))
    b2 = int(round(n * (split[0] + split[1])))
    # 每個切分至少一筆
    b1 = min(max(b1, 1), n - 2)
    b2 = min(max(b2, b1 + 1), n - 1)
    return b1, b2


def split_records(
    entries: Sequence[ManifestEntry],
    split: Sequence[float],
    seed: int,
) -> Dict[str, List[ManifestEntry]]:
    """
    每個類別各自以種子打亂後依比例切分

    Args:
        entries: 清單項目（一般資料）
        split: (train, calibration, test) 比例
        seed: 全域種子

    Returns:
        {"train": [...], "calibration": [...], "test": [...]}，各自依路徑排序

    Raises:
        ConfigurationError: 某類別少於 3 筆紀錄
    """
    by_label: Dict[int, List[ManifestEntry]] = {}
    for entry in entries:
        by_label.setdefault(entry.label, []).append(entry)

    result: Dict[str, List[ManifestEntry]] = {name: [] for name in SPLIT_NAMES}
    for label in sorted(by_label):
        group = sorted(by_label[label], key=lambda e: e.path)
        n = len(group)
        if n < 3:
            raise ConfigurationError(
                f"class {label_name(label)} has {n} record(s); "
                "at least 3 are needed to fill train/calibration/test"
            )
        rng = np.random.default_rng(np.random.SeedSequence([seed, label, 2]))
        order = rng.permutation(n)
        b1, b2 = _boundaries(n, split)
        result["train"].extend(group[i] for i in order[:b1])
        result["calibration"].extend(group[i] for i in order[b1:b2])
        result["test"].extend(group[i] for i in order[b2:])

    for name in SPLIT_NAMES:
        result[name].sort(key=lambda e: e.path)
    logger.debug(
        "Split %d records: %s",
        len(entries),
        {name: len(items) for name, items in result.items()},
    )
    return result


def load_records(
    entries: Sequence[ManifestEntry], data_dir: Union[str, Path]
) -> List[Tuple[str, SignalRecord]]:
    """讀取清單項目，回傳 (record_id, record)"""
    return [(entry.record_id, load_entry(entry, data_dir)) for entry in entries]


def load_windows(
    entries: Sequence[ManifestEntry],
    data_dir: Union[str, Path],
    config: PreprocessConfig,
) -> List[PulseWindow]:
    """讀取紀錄並完成前處理"""
    loaded = load_records(entries, data_dir)
    return preprocess_records(
        [record for _, record in loaded],
        config,
        source_ids=[record_id for record_id, _ in loaded],
    )
