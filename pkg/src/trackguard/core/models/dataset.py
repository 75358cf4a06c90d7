"""資料集清單模型"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .signal import NOMINAL_LABEL, label_name

MANIFEST_VERSION = "trackguard-manifest/1"

# 一般資料與保留（未知異常）資料的分組名稱
GROUP_MAIN = "main"
GROUP_HOLDOUT = "holdout"


@dataclass(frozen=True)
class ManifestEntry:
    """清單中的一筆紀錄"""

    path: str  # 相對於 data_dir
    label: int
    seed: int
    onset_index: Optional[int] = None
    critical_index: Optional[int] = None
    recovery_index: Optional[int] = None
    split: str = GROUP_MAIN

    @property
    def record_id(self) -> str:
        return self.path.rsplit("/", 1)[-1].rsplit(".", 1)[0]

    @property
    def is_nominal(self) -> bool:
        return self.label == NOMINAL_LABEL

    def to_dict(self) -> Dict[str, Any]:
        return {
            "path": self.path,
            "label": label_name(self.label),
            "seed": self.seed,
            "onset_index": self.onset_index,
            "critical_index": self.critical_index,
            "recovery_index": self.recovery_index,
            "split": self.split,
        }


@dataclass
class DatasetManifest:
    """generate_dataset 的輸出：紀錄清單與產生參數"""

    seed: int
    entries: List[ManifestEntry] = field(default_factory=list)
    generator: Dict[str, Any] = field(default_factory=dict)
    version: str = MANIFEST_VERSION

    def __len__(self) -> int:
        return len(self.entries)

    def main_entries(self) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == GROUP_MAIN]

    def holdout_entries(self) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == GROUP_HOLDOUT]

    def labels(self) -> List[int]:
        """一般資料中出現的標籤（排序）"""
        return sorted({e.label for e in self.main_entries()})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "seed": self.seed,
            "generator": dict(self.generator),
            "records": [e.to_dict() for e in self.entries],
        }
