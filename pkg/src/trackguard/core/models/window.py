"""脈衝視窗資料模型"""

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from src.trackguard.utils.exceptions import DomainError

from .signal import NOMINAL_LABEL


@dataclass(frozen=True, eq=False)
class PulseWindow:
    """SignalRecord 的固定長度雙通道切片"""

    cat: np.ndarray
    cal: np.ndarray
    source_id: str
    start_index: int
    label: int
    stage_fraction: Optional[float] = None
    normalized: bool = False

    def __post_init__(self):
        cat = np.asarray(self.cat, dtype=np.float64)
        cal = np.asarray(self.cal, dtype=np.float64)
        object.__setattr__(self, "cat", cat)
        object.__setattr__(self, "cal", cal)
        if cat.shape != cal.shape or cat.ndim != 1:
            raise DomainError("window channels must be equal-length vectors")
        if (self.label == NOMINAL_LABEL) != (self.stage_fraction is None):
            raise DomainError("stage_fraction is present iff the window is anomalous")

    @property
    def window_len(self) -> int:
        return len(self.cat)

    @property
    def center_index(self) -> int:
        return self.start_index + self.window_len // 2

    def with_channels(self, cat: np.ndarray, cal: np.ndarray, normalized: bool):
        return replace(self, cat=cat, cal=cal, normalized=normalized)

    def flatten(self) -> np.ndarray:
        """展平成分類器輸入向量 [cat..., cal...]"""
        return np.concatenate([self.cat, self.cal])


def stack_windows(windows: Sequence[PulseWindow]) -> np.ndarray:
    """把視窗堆疊成 [N x 2*window_len] 矩陣"""
    if not windows:
        return np.zeros((0, 0))
    return np.vstack([w.flatten() for w in windows])


def window_labels(windows: Sequence[PulseWindow]) -> List[int]:
    return [w.label for w in windows]
