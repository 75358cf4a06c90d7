"""共形預測資料模型"""

from dataclasses import dataclass, field
from typing import FrozenSet, Tuple

import numpy as np


@dataclass(frozen=True)
class CalibrationResult:
    """校準結果：分數門檻 q_hat 與其來源資訊"""

    q_hat: float
    alpha: float
    n_cal: int
    score_method: str = "one_minus_true_prob"
    saturated: bool = False


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """預測集合，空集合代表未知異常"""

    labels: FrozenSet[int]
    probs: np.ndarray
    q_hat_used: float
    # 機率向量索引對應的標籤編號
    label_ids: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def is_empty(self) -> bool:
        return not self.labels

    @property
    def is_singleton(self) -> bool:
        return len(self.labels) == 1

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PredictionSet):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.q_hat_used == other.q_hat_used
            and np.array_equal(self.probs, other.probs)
        )
