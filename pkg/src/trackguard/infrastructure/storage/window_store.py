"""視窗資料集 CSV（每個切分一個檔案）"""

import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from src.trackguard.core.models.signal import label_name, parse_label_name
from src.trackguard.core.models.window import PulseWindow
from src.trackguard.utils.exceptions import ArtifactIOError, DataFormatError, DomainError

logger = logging.getLogger(__name__)

META_COLUMNS = ["source_id", "start_index", "label", "stage_fraction"]


def window_columns(window_len: int) -> List[str]:
    return (
        META_COLUMNS
        + [f"cat_{i}" for i in range(window_len)]
        + [f"cal_{i}" for i in range(window_len)]
    )


def windows_to_frame(windows: Sequence[PulseWindow]) -> pd.DataFrame:
    """視窗轉成 DataFrame（欄位順序固定）"""
    if not windows:
        return pd.DataFrame(columns=META_COLUMNS)
    window_len = windows[0].window_len
    rows = []
    for w in windows:
        if w.window_len != window_len:
            raise DomainError("windows of different lengths cannot share a file")
        rows.append(
            [w.source_id, w.start_index, label_name(w.label), w.stage_fraction]
            + w.cat.tolist()
            + w.cal.tolist()
        )
    return pd.DataFrame(rows, columns=window_columns(window_len))


def write_window_csv(windows: Sequence[PulseWindow], path: Union[str, Path]) -> Path:
    """寫出視窗 CSV"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        windows_to_frame(windows).to_csv(path, index=False, float_format="%r")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write windows ({e.strerror})")
    logger.info("Wrote %d windows to %s", len(windows), path)
    return path


def read_window_csv(path: Union[str, Path], normalized: bool = True) -> List[PulseWindow]:
    """讀取視窗 CSV"""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"source_id": str}, float_precision="round_trip")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot read windows ({e.strerror})")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataFormatError(f"malformed window file ({e})", str(path))

    missing = [c for c in META_COLUMNS if c not in frame.columns]
    if missing:
        raise DataFormatError("missing column", str(path), field=missing[0])
    n_signal = len(frame.columns) - len(META_COLUMNS)
    if n_signal % 2:
        raise DataFormatError("cat/cal column counts differ", str(path), 1)
    window_len = n_signal // 2
    if list(frame.columns) != window_columns(window_len):
        raise DataFormatError("unexpected column layout", str(path), 1)

    cat_cols = [f"cat_{i}" for i in range(window_len)]
    cal_cols = [f"cal_{i}" for i in range(window_len)]
    windows = []
    for row_no, record in enumerate(frame.to_dict("records"), start=2):
        try:
            label = parse_label_name(str(record["label"]))
            stage = record["stage_fraction"]
            windows.append(
                PulseWindow(
                    cat=np.array([record[c] for c in cat_cols], dtype=np.float64),
                    cal=np.array([record[c] for c in cal_cols], dtype=np.float64),
                    source_id=str(record["source_id"]),
                    start_index=int(record["start_index"]),
                    label=label,
                    stage_fraction=None if pd.isna(stage) else float(stage),
                    normalized=normalized,
                )
            )
        except (DomainError, ValueError) as e:
            raise DataFormatError(str(e), str(path), row_no)
    return windows
