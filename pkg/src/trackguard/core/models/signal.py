"""訊號資料模型

SignalRecord（完整的雙通道實驗紀錄）與異常類別目錄。
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from src.trackguard.utils.exceptions import DomainError

# 正常（Nominal）類別的標籤編號
NOMINAL_LABEL = 0


class ChannelScope(Enum):
    """異常影響的接收通道"""

    UPSTREAM = "cat"
    DOWNSTREAM = "cal"
    BOTH = "both"

    @property
    def affects_cat(self) -> bool:
        return self in (ChannelScope.UPSTREAM, ChannelScope.BOTH)

    @property
    def affects_cal(self) -> bool:
        return self in (ChannelScope.DOWNSTREAM, ChannelScope.BOTH)


class EnvelopeKind(Enum):
    """劣化包絡類型"""

    PROGRESSIVE_LINEAR = "progressive_linear"
    PROGRESSIVE_EXPONENTIAL = "progressive_exponential"
    INTERMITTENT = "intermittent"
    STEP = "step"

    @property
    def is_progressive(self) -> bool:
        return self in (
            EnvelopeKind.PROGRESSIVE_LINEAR,
            EnvelopeKind.PROGRESSIVE_EXPONENTIAL,
        )


@dataclass(frozen=True)
class AnomalyClass:
    """異常類別定義"""

    id: int
    description: str
    affected_channel: ChannelScope
    envelope_kind: EnvelopeKind
    # 有效嚴重度 = severity_max * severity_scale
    severity_scale: float = 1.0
    # 類別特徵紋波週期（以取樣點計）
    ripple_periods: Tuple[float, ...] = (32.0,)

    def __post_init__(self):
        if not 1 <= self.id <= 11:
            raise DomainError(f"anomaly id {self.id} outside 1..11")
        if not 0 < self.severity_scale <= 1:
            raise DomainError("severity_scale must be in (0, 1]")
        if not self.ripple_periods or any(p <= 0 for p in self.ripple_periods):
            raise DomainError("ripple_periods must be positive")

    @property
    def name(self) -> str:
        return label_name(self.id)


def _catalog() -> Dict[int, AnomalyClass]:
    up, down, both = ChannelScope.UPSTREAM, ChannelScope.DOWNSTREAM, ChannelScope.BOTH
    lin = EnvelopeKind.PROGRESSIVE_LINEAR
    exp = EnvelopeKind.PROGRESSIVE_EXPONENTIAL
    entries = [
        AnomalyClass(
            1,
            "Decrease of the ballast resistance simulated with a 1-ohm resistance",
            both,
            exp,
            ripple_periods=(32.0,),
        ),
        AnomalyClass(
            2, "Degradation of the LC downstream contact", down, exp, ripple_periods=(32.0,)
        ),
        AnomalyClass(
            3, "Degradation of the LC upstream contact", up, exp, ripple_periods=(32.0,)
        ),
        AnomalyClass(
            4,
            "Degradation of the track transformer contact",
            both,
            exp,
            ripple_periods=(16.0,),
        ),
        AnomalyClass(
            5,
            "Degradation of the wheel-rail contact",
            both,
            exp,
            ripple_periods=(64.0 / 3.0,),
        ),
        # 感測端的間歇性劣化：特徵為 3 與 9 的混合，預設作為未知異常保留
        AnomalyClass(
            6,
            "Intermittent degradation of the railway bonding between the remote "
            "amplifier (RA) and the sensor",
            up,
            EnvelopeKind.INTERMITTENT,
            ripple_periods=(32.0, 16.0),
        ),
        AnomalyClass(
            7,
            "Progressive degradation of the railway bonding between the remote "
            "amplifier (RA) and the receiver",
            down,
            lin,
            severity_scale=0.375,
            ripple_periods=(16.0,),
        ),
        AnomalyClass(
            8,
            "Intermittent degradation of the railway bonding between the remote "
            "amplifier (RA) and the receiver",
            down,
            EnvelopeKind.INTERMITTENT,
            ripple_periods=(64.0 / 3.0,),
        ),
        AnomalyClass(
            9,
            "Progressive degradation of the railway bonding between the remote "
            "amplifier (RA) and the sensor",
            up,
            lin,
            severity_scale=0.375,
            ripple_periods=(16.0,),
        ),
        AnomalyClass(
            10, "Broken rail downstream", down, EnvelopeKind.STEP, ripple_periods=(12.8,)
        ),
        AnomalyClass(
            11, "Broken rail upstream", up, EnvelopeKind.STEP, ripple_periods=(12.8,)
        ),
    ]
    return {entry.id: entry for entry in entries}


# 異常類別目錄（Anomaly 1..11）
ANOMALY_CATALOG: Dict[int, AnomalyClass] = _catalog()


def get_anomaly_class(class_id: int) -> AnomalyClass:
    """依編號取得異常類別"""
    try:
        return ANOMALY_CATALOG[class_id]
    except KeyError:
        raise DomainError(f"unknown anomaly class {class_id}")


def label_name(label: int) -> str:
    """標籤的文字表示：nominal 或 anomaly_<id>"""
    return "nominal" if label == NOMINAL_LABEL else f"anomaly_{label}"


def parse_label_name(text: str) -> int:
    """label_name 的反函數"""
    if text == "nominal":
        return NOMINAL_LABEL
    prefix = "anomaly_"
    if text.startswith(prefix) and text[len(prefix) :].isdigit():
        label = int(text[len(prefix) :])
        if 1 <= label <= 11:
            return label
    raise DomainError(f"invalid label '{text}'")


@dataclass(frozen=True, eq=False)
class SignalRecord:
    """完整的雙通道實驗紀錄（含階段索引）"""

    sample_rate: int
    cat: np.ndarray
    cal: np.ndarray
    label: int
    seed: int
    onset_index: Optional[int] = None
    critical_index: Optional[int] = None
    recovery_index: Optional[int] = None

    def __post_init__(self):
        cat = np.asarray(self.cat, dtype=np.float64)
        cal = np.asarray(self.cal, dtype=np.float64)
        object.__setattr__(self, "cat", cat)
        object.__setattr__(self, "cal", cal)

        if self.sample_rate <= 0:
            raise DomainError("sample_rate must be positive")
        if cat.ndim != 1 or cal.ndim != 1:
            raise DomainError("channels must be one-dimensional")
        if len(cat) == 0 or len(cat) != len(cal):
            raise DomainError("cat and cal must be non-empty and of equal length")
        if not (np.all(np.isfinite(cat)) and np.all(np.isfinite(cal))):
            raise DomainError("channels contain non-finite samples")

        indices = (self.onset_index, self.critical_index, self.recovery_index)
        if self.label == NOMINAL_LABEL:
            if any(i is not None for i in indices):
                raise DomainError("nominal records carry no phase indices")
        else:
            get_anomaly_class(self.label)
            if any(i is None for i in indices):
                raise DomainError("anomaly records need onset/critical/recovery indices")
            if not (
                0
                <= self.onset_index
                < self.critical_index
                <= self.recovery_index
                <= len(cat)
            ):
                raise DomainError(
                    "phase indices must satisfy 0 <= onset < critical <= recovery <= length"
                )

    def __len__(self) -> int:
        return len(self.cat)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalRecord):
            return NotImplemented
        return (
            self.sample_rate == other.sample_rate
            and self.label == other.label
            and self.seed == other.seed
            and self.onset_index == other.onset_index
            and self.critical_index == other.critical_index
            and self.recovery_index == other.recovery_index
            and np.array_equal(self.cat, other.cat)
            and np.array_equal(self.cal, other.cal)
        )

    @property
    def is_nominal(self) -> bool:
        return self.label == NOMINAL_LABEL

    @property
    def label_name(self) -> str:
        return label_name(self.label)

    def record_id(self) -> str:
        """預設紀錄識別碼"""
        return f"{self.label_name}-seed{self.seed}"
