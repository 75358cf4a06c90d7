"""基礎配置定義

定義了 trackguard 執行配置的資料結構。每個區段都是 dataclass，
在 __post_init__ 中做欄位驗證，失敗時拋出 ValueError，
由 config.settings 包裝為 ConfigurationError。
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple


class Environment(Enum):
    """環境類型枚舉"""

    DEVELOPMENT = "development"
    TESTING = "testing"
    PRODUCTION = "production"


class LogLevel(Enum):
    """日誌等級枚舉"""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class LabelRule(Enum):
    """視窗標籤規則"""

    CENTER_PHASE = "center_phase"
    MAJORITY_PHASE = "majority_phase"


class ScoreMethod(Enum):
    """一致性分數方法"""

    ONE_MINUS_TRUE_PROB = "one_minus_true_prob"
    ADAPTIVE_CUMULATIVE = "adaptive_cumulative"


class DetectionMode(Enum):
    """模型偵測判定方式"""

    SINGLETON = "singleton"
    ARGMAX = "argmax"


# 預設產生的 10 個異常類別（不含 Anomaly 6）
DEFAULT_CLASSES = [1, 2, 3, 4, 5, 7, 8, 9, 10, 11]
DEFAULT_HOLDOUT_CLASSES = [6]


@dataclass
class GeneratorConfig:
    """訊號產生器配置"""

    carrier_freq: float = 9500.0
    sample_rate: int = 50
    nominal_amplitude: float = 1.0
    noise_sigma: float = 0.02
    nominal_lead_samples: int = 800
    anomaly_samples: int = 4000
    nominal_tail_samples: int = 400
    severity_max: float = 0.4
    early_flatness: float = 3.0

    # 類別特徵紋波與包絡參數
    ripple_depth: float = 0.02
    step_position: float = 0.9
    dropout_rate: float = 1.0
    dropout_block: int = 10

    def __post_init__(self):
        """配置後驗證"""
        if not 8200 <= self.carrier_freq <= 11000:
            raise ValueError(
                f"carrier_freq {self.carrier_freq} Hz outside [8200, 11000]"
            )
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be a positive integer")
        if self.nominal_amplitude <= 0:
            raise ValueError("nominal_amplitude must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        for name in ("nominal_lead_samples", "anomaly_samples", "nominal_tail_samples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.severity_max <= 1:
            raise ValueError("severity_max must be in (0, 1]")
        if self.early_flatness < 1:
            raise ValueError("early_flatness must be >= 1")
        if self.ripple_depth < 0:
            raise ValueError("ripple_depth must be >= 0")
        if not 0 <= self.step_position <= 1:
            raise ValueError("step_position must be in [0, 1]")
        if not 0 <= self.dropout_rate <= 1:
            raise ValueError("dropout_rate must be in [0, 1]")
        if self.dropout_block < 1:
            raise ValueError("dropout_block must be >= 1")

    @property
    def record_length(self) -> int:
        return (
            self.nominal_lead_samples
            + self.anomaly_samples
            + self.nominal_tail_samples
        )


@dataclass
class DatasetConfig:
    """資料集產生配置"""

    records_per_class: int = 10
    nominal_records: int = 4
    classes: List[int] = field(default_factory=lambda: list(DEFAULT_CLASSES))
    holdout_classes: List[int] = field(
        default_factory=lambda: list(DEFAULT_HOLDOUT_CLASSES)
    )
    holdout_records: int = 2

    def __post_init__(self):
        if self.records_per_class < 1:
            raise ValueError("records_per_class must be >= 1")
        if self.nominal_records < 0 or self.holdout_records < 0:
            raise ValueError("record counts must be >= 0")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("classes must not repeat")
        overlap = set(self.classes) & set(self.holdout_classes)
        if overlap:
            raise ValueError(f"classes {sorted(overlap)} are both trained and held out")


@dataclass
class PreprocessConfig:
    """前處理配置"""

    window_len: int = 64
    stride: int = 16
    smooth_radius: int = 2
    label_rule: LabelRule = LabelRule.CENTER_PHASE

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if not 1 <= self.stride <= self.window_len:
            raise ValueError("stride must satisfy 1 <= stride <= window_len")
        if self.smooth_radius < 0:
            raise ValueError("smooth_radius must be >= 0")


@dataclass
class TrainConfig:
    """分類器訓練配置"""

    learning_rate: float = 0.05
    batch_size: int = 64
    epochs: int = 30
    seed: Optional[int] = None
    l2: float = 1e-4
    split: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    hidden_layers: List[int] = field(default_factory=lambda: [64, 32])

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        self.split = tuple(self.split)
        if len(self.split) != 3 or any(f <= 0 for f in self.split):
            raise ValueError("split must be three positive fractions")
        if not math.isclose(sum(self.split), 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ValueError("split fractions must sum to 1")
        if any(width < 1 for width in self.hidden_layers):
            raise ValueError("hidden layer widths must be >= 1")


@dataclass
class ConformalConfig:
    """共形預測配置"""

    alpha: float = 0.01
    score_method: ScoreMethod = ScoreMethod.ONE_MINUS_TRUE_PROB

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")


@dataclass
class EvaluationConfig:
    """評估配置"""

    k: float = 3.0
    m: int = 3
    detection_mode: DetectionMode = DetectionMode.SINGLETON
    include_nominal: bool = False
    stage_bins: int = 3

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.stage_bins < 1:
            raise ValueError("stage_bins must be >= 1")


@dataclass
class PathsConfig:
    """產物路徑配置（全部必填）"""

    data_dir: str
    model_path: str
    calib_path: str
    report_dir: str

    def __post_init__(self):
        for name in ("data_dir", "model_path", "calib_path", "report_dir"):
            if not getattr(self, name):
                raise ValueError(f"paths.{name} must be non-empty")


@dataclass
class MonitoringConfig:
    """監控配置"""

    log_level: LogLevel = LogLevel.INFO
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


@dataclass
class RunConfig:
    """執行配置根節點"""

    paths: PathsConfig
    seed: int = 42
    environment: Environment = Environment.PRODUCTION
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    conformal: ConformalConfig = field(default_factory=ConformalConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    monitoring: MonitoringConfig = field(default_factory=MonitoringConfig)

    @property
    def train_seed(self) -> int:
        """訓練種子，未指定時沿用全域種子"""
        return self.seed if self.train.seed is None else self.train.seed
