"""
紀錄 CSV 與資料集清單的讀寫

CSV 格式：
    第 1 行  # trackguard-csv v1
    第 2 行  key=value 以 ; 分隔的 metadata
    第 3 行  index,cat,cal
    其後     整數索引與兩個 repr 格式的浮點數（可完整還原）
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Union

import aiofiles

from src.trackguard.core.models.dataset import (
    GROUP_HOLDOUT,
    GROUP_MAIN,
    MANIFEST_VERSION,
    DatasetManifest,
    ManifestEntry,
)
from src.trackguard.core.models.signal import SignalRecord, parse_label_name
from src.trackguard.utils.exceptions import (
    ArtifactIOError,
    DataFormatError,
    DomainError,
    ModelVersionError,
)

logger = logging.getLogger(__name__)

CSV_HEADER = "# trackguard-csv v1"
COLUMN_HEADER = "index,cat,cal"
INDEX_KEYS = ("onset_index", "critical_index", "recovery_index")
METADATA_KEYS = ("label", "sample_rate", "seed") + INDEX_KEYS

MANIFEST_FILENAME = "manifest.json"

PathLike = Union[str, Path]


def format_record_csv(record: SignalRecord) -> str:
    """把紀錄格式化為 CSV 文字"""
    meta = [
        f"label={record.label_name}",
        f"sample_rate={record.sample_rate}",
        f"seed={record.seed}",
    ]
    if not record.is_nominal:
        meta += [f"{key}={getattr(record, key)}" for key in INDEX_KEYS]

    lines = [CSV_HEADER, ";".join(meta), COLUMN_HEADER]
    lines.extend(
        f"{i},{float(c)!r},{float(a)!r}"
        for i, (c, a) in enumerate(zip(record.cat.tolist(), record.cal.tolist()))
    )
    return "\n".join(lines) + "\n"


def write_csv(record: SignalRecord, path: PathLike) -> None:
    """寫出紀錄 CSV"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_record_csv(record), encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write record ({e.strerror})")


async def write_csv_async(record: SignalRecord, path: PathLike) -> None:
    """異步寫出紀錄 CSV"""
    path = Path(path)
    text = format_record_csv(record)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(path, "w", encoding="utf-8") as f:
            await f.write(text)
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write record ({e.strerror})")


def _parse_int(value: str, path: str, line: int, field: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataFormatError(f"expected integer, got {value!r}", path, line, field)


def _parse_metadata(text: str, path: str) -> Dict[str, str]:
    meta: Dict[str, str] = {}
    for pair in text.split(";"):
        if "=" not in pair:
            raise DataFormatError(f"malformed metadata pair {pair!r}", path, 2)
        key, value = pair.split("=", 1)
        key = key.strip()
        if key not in METADATA_KEYS:
            raise DataFormatError("unknown metadata key", path, 2, key)
        if key in meta:
            raise DataFormatError("duplicate metadata key", path, 2, key)
        meta[key] = value.strip()
    return meta


def parse_record_csv(text: str, path: str = "<string>") -> SignalRecord:
    """
    解析紀錄 CSV 文字

    Raises:
        DataFormatError: 標頭錯誤、欄位數不符、非有限值或 metadata 缺漏（含行號）
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise DataFormatError(f"expected header '{CSV_HEADER}'", path, 1)
    if len(lines) < 2:
        raise DataFormatError("missing metadata line", path, 2)
    meta = _parse_metadata(lines[1], path)

    for key in ("label", "sample_rate", "seed"):
        if key not in meta:
            raise DataFormatError("missing metadata key", path, 2, key)
    try:
        label = parse_label_name(meta["label"])
    except DomainError as e:
        raise DataFormatError(str(e), path, 2, "label")
    sample_rate = _parse_int(meta["sample_rate"], path, 2, "sample_rate")
    seed = _parse_int(meta["seed"], path, 2, "seed")

    indices: Dict[str, Optional[int]] = {key: None for key in INDEX_KEYS}
    for key in INDEX_KEYS:
        if key in meta:
            indices[key] = _parse_int(meta[key], path, 2, key)
        elif label != 0:
            raise DataFormatError("missing metadata key for anomaly record", path, 2, key)

    if len(lines) < 3 or lines[2].strip() != COLUMN_HEADER:
        raise DataFormatError(f"expected column header '{COLUMN_HEADER}'", path, 3)

    cat: List[float] = []
    cal: List[float] = []
    for offset, row in enumerate(lines[3:]):
        line_no = offset + 4
        cells = row.split(",")
        if len(cells) != 3:
            raise DataFormatError(f"expected 3 columns, got {len(cells)}", path, line_no)
        index = _parse_int(cells[0], path, line_no, "index")
        if index != offset:
            raise DataFormatError(f"expected index {offset}, got {index}", path, line_no)
        values = []
        for name, cell in zip(("cat", "cal"), cells[1:]):
            try:
                value = float(cell)
            except ValueError:
                raise DataFormatError(f"expected float, got {cell!r}", path, line_no, name)
            if not math.isfinite(value):
                raise DataFormatError("non-finite sample", path, line_no, name)
            values.append(value)
        cat.append(values[0])
        cal.append(values[1])

    if not cat:
        raise DataFormatError("record has no samples", path, 4)

    try:
        return SignalRecord(
            sample_rate=sample_rate,
            cat=cat,
            cal=cal,
            label=label,
            seed=seed,
            **indices,
        )
    except DomainError as e:
        raise DataFormatError(str(e), path)


def read_csv(path: PathLike) -> SignalRecord:
    """讀取紀錄 CSV"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot read record ({e.strerror})")
    return parse_record_csv(text, str(path))


def write_manifest(manifest: DatasetManifest, data_dir: PathLike) -> Path:
    """寫出 data_dir/manifest.json"""
    path = Path(data_dir) / MANIFEST_FILENAME
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(manifest.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write manifest ({e.strerror})")
    return path


def _entry_from_dict(item: Dict, path: str, position: int) -> ManifestEntry:
    field_prefix = f"records[{position}]"
    try:
        label = parse_label_name(item["label"])
        split = item.get("split", GROUP_MAIN)
        if split not in (GROUP_MAIN, GROUP_HOLDOUT):
            raise DataFormatError(f"unknown split {split!r}", path, field=f"{field_prefix}.split")
        return ManifestEntry(
            path=str(item["path"]),
            label=label,
            seed=int(item["seed"]),
            onset_index=item.get("onset_index"),
            critical_index=item.get("critical_index"),
            recovery_index=item.get("recovery_index"),
            split=split,
        )
    except KeyError as e:
        raise DataFormatError("missing key", path, field=f"{field_prefix}.{e.args[0]}")
    except (DomainError, TypeError, ValueError) as e:
        raise DataFormatError(str(e), path, field=field_prefix)


def read_manifest(data_dir: PathLike) -> DatasetManifest:
    """讀取 data_dir/manifest.json"""
    path = Path(data_dir) / MANIFEST_FILENAME
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot read manifest ({e.strerror})")

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"invalid JSON ({e.msg})", str(path), e.lineno)
    if not isinstance(data, dict):
        raise DataFormatError("manifest must be a JSON object", str(path))
    if data.get("version") != MANIFEST_VERSION:
        raise ModelVersionError(
            f"expected {MANIFEST_VERSION}, got {data.get('version')!r}",
            str(path),
            field="version",
        )

    records = data.get("records")
    if not isinstance(records, list):
        raise DataFormatError("missing records list", str(path), field="records")

    return DatasetManifest(
        seed=int(data.get("seed", 0)),
        entries=[_entry_from_dict(item, str(path), i) for i, item in enumerate(records)],
        generator=dict(data.get("generator") or {}),
    )


def load_entry(entry: ManifestEntry, data_dir: PathLike) -> SignalRecord:
    """讀取清單項目對應的紀錄"""
    return read_csv(Path(data_dir) / entry.path)
