"""評估結果資料模型"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .signal import label_name


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """混淆矩陣（列 = 真實，欄 = 預測）"""

    counts: np.ndarray
    label_ids: Sequence[int]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        total = self.total
        return float(np.trace(self.counts)) / total if total else float("nan")

    def normalized(self) -> np.ndarray:
        """每列除以列和；列和為 0 的列為 NaN（未定義）"""
        counts = self.counts.astype(np.float64)
        sums = counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(sums > 0, counts / np.where(sums > 0, sums, 1.0), np.nan)

    def names(self) -> List[str]:
        return [label_name(label) for label in self.label_ids]


@dataclass(frozen=True)
class EarlinessEntry:
    """單一紀錄、單一方法的偵測結果"""

    record_id: str
    label: int
    method: str
    first_detection_index: Optional[int]
    earliness_percent: Optional[float]
    premature: bool = False

    @property
    def summary_percent(self) -> float:
        """
        摘要平均使用的早期度

        未偵測或偵測於臨界之後計為 100%。跨越 onset、中心早於 onset 的視窗
        偵測計為 0%；完全落在正常前段的命中不會成為偵測。
        """
        if self.premature:
            return 0.0
        if self.earliness_percent is None:
            return 100.0
        return self.earliness_percent


@dataclass
class EarlinessReport:
    """早期偵測報告"""

    entries: List[EarlinessEntry] = field(default_factory=list)

    def summary(self) -> Dict[str, Dict[int, float]]:
        """每種方法、每個類別的平均早期度"""
        grouped: Dict[str, Dict[int, List[float]]] = {}
        for entry in self.entries:
            grouped.setdefault(entry.method, {}).setdefault(entry.label, []).append(
                entry.summary_percent
            )
        return {
            method: {label: float(np.mean(values)) for label, values in sorted(by.items())}
            for method, by in sorted(grouped.items())
        }

    def method_mean(self, method: str, labels: Optional[Sequence[int]] = None) -> float:
        values = [
            e.summary_percent
            for e in self.entries
            if e.method == method and (labels is None or e.label in labels)
        ]
        return float(np.mean(values)) if values else float("nan")
