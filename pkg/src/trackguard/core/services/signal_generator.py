"""
合成訊號產生服務

以解調後的振幅包絡模擬 CAT/CAL 兩個接收通道：
前段正常訊號、異常發展段（包絡乘上振幅並疊加類別紋波）、後段正常訊號，
兩通道全程加上高斯雜訊。載波頻率只保留為 metadata。
"""

import asyncio
import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.base import GeneratorConfig
from src.trackguard.core.models.dataset import (
    GROUP_HOLDOUT,
    GROUP_MAIN,
    DatasetManifest,
    ManifestEntry,
)
from src.trackguard.core.models.signal import (
    NOMINAL_LABEL,
    AnomalyClass,
    EnvelopeKind,
    SignalRecord,
    get_anomaly_class,
    label_name,
)
from src.trackguard.infrastructure.storage.csv_store import (
    write_csv_async,
    write_manifest,
)
from src.trackguard.utils.exceptions import DomainError

logger = logging.getLogger(__name__)

ClassSpec = Union[AnomalyClass, int, None]


@dataclass(frozen=True)
class EnvelopeParams:
    """包絡參數"""

    severity: float
    early_flatness: float = 1.0
    step_position: float = 0.9
    dropout_rate: float = 1.0

    def __post_init__(self):
        if not 0 < self.severity <= 1:
            raise DomainError("severity must be in (0, 1]")
        if self.early_flatness < 1:
            raise DomainError("early_flatness must be >= 1")
        if not 0 <= self.step_position <= 1:
            raise DomainError("step_position must be in [0, 1]")
        if not 0 <= self.dropout_rate <= 1:
            raise DomainError("dropout_rate must be in [0, 1]")

    @classmethod
    def for_class(cls, anomaly: AnomalyClass, config: GeneratorConfig) -> "EnvelopeParams":
        return cls(
            severity=config.severity_max * anomaly.severity_scale,
            early_flatness=config.early_flatness,
            step_position=config.step_position,
            dropout_rate=config.dropout_rate,
        )


def degradation_envelope(
    kind: EnvelopeKind,
    t: float,
    params: EnvelopeParams,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    計算異常進度 t 時的振幅倍率

    Args:
        kind: 包絡類型
        t: 異常段內的進度，[0, 1]
        params: 包絡參數
        rng: 間歇型包絡所需的亂數產生器

    Returns:
        [0, 1] 內的倍率，t = 0 時為 1.0

    Raises:
        DomainError: t 超出 [0, 1]，或間歇型未提供 rng
    """
    if not 0.0 <= t <= 1.0:  # NaN 也會落到這裡
        raise DomainError(f"t={t} outside [0, 1]")
    if t == 0.0:
        return 1.0

    if kind == EnvelopeKind.PROGRESSIVE_LINEAR:
        return 1.0 - params.severity * t
    if kind == EnvelopeKind.PROGRESSIVE_EXPONENTIAL:
        return 1.0 - params.severity * t**params.early_flatness
    if kind == EnvelopeKind.STEP:
        return 1.0 if t < params.step_position else 1.0 - params.severity
    if kind == EnvelopeKind.INTERMITTENT:
        if rng is None:
            raise DomainError("intermittent envelope needs a seeded rng")
        dropout_prob = params.dropout_rate * t**params.early_flatness
        return 1.0 - params.severity if rng.random() < dropout_prob else 1.0

    raise DomainError(f"unsupported envelope kind {kind!r}")


def envelope_profile(
    anomaly: AnomalyClass,
    config: GeneratorConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """異常段逐點包絡，t = j / anomaly_samples"""
    n = config.anomaly_samples
    params = EnvelopeParams.for_class(anomaly, config)
    t = np.arange(n, dtype=np.float64) / n

    if anomaly.envelope_kind != EnvelopeKind.INTERMITTENT:
        return np.array([degradation_envelope(anomaly.envelope_kind, v, params) for v in t])

    # 每個 dropout 判定維持 dropout_block 個取樣
    profile = np.ones(n, dtype=np.float64)
    for start in range(0, n, config.dropout_block):
        value = degradation_envelope(anomaly.envelope_kind, t[start], params, rng)
        profile[start : start + config.dropout_block] = value
    return profile


def class_ripple(
    anomaly: AnomalyClass,
    length: int,
    depth: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """類別特徵紋波：各週期正弦疊加，隨機相位，平均為零"""
    j = np.arange(length, dtype=np.float64)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(anomaly.ripple_periods))
    scale = depth / math.sqrt(len(anomaly.ripple_periods))
    ripple = np.zeros(length, dtype=np.float64)
    for period, phase in zip(anomaly.ripple_periods, phases):
        ripple += scale * np.sin(2.0 * np.pi * j / period + phase)
    return ripple


def _resolve_class(spec: ClassSpec) -> Optional[AnomalyClass]:
    if spec is None:
        return None
    if isinstance(spec, AnomalyClass):
        return spec
    if spec == NOMINAL_LABEL:
        return None
    return get_anomaly_class(spec)


def generate_record(cls: ClassSpec, config: GeneratorConfig, seed: int) -> SignalRecord:
    """
    產生一筆實驗紀錄

    Args:
        cls: 異常類別（AnomalyClass 或編號），None 或 0 代表正常
        config: 產生器配置
        seed: 亂數種子

    Returns:
        SignalRecord，固定 (cls, config, seed) 時逐位元相同
    """
    anomaly = _resolve_class(cls)
    rng = np.random.default_rng(seed)

    lead = config.nominal_lead_samples
    span = config.anomaly_samples
    length = config.record_length
    amplitude = config.nominal_amplitude

    cat_level = np.ones(length, dtype=np.float64)
    cal_level = np.ones(length, dtype=np.float64)

    if anomaly is not None:
        ripple = class_ripple(anomaly, span, config.ripple_depth, rng)
        degraded = envelope_profile(anomaly, config, rng) + ripple
        if anomaly.affected_channel.affects_cat:
            cat_level[lead : lead + span] = degraded
        if anomaly.affected_channel.affects_cal:
            cal_level[lead : lead + span] = degraded

    sigma = config.noise_sigma * amplitude
    cat = amplitude * cat_level + rng.normal(0.0, sigma, size=length)
    cal = amplitude * cal_level + rng.normal(0.0, sigma, size=length)

    if anomaly is None:
        return SignalRecord(
            sample_rate=config.sample_rate, cat=cat, cal=cal, label=NOMINAL_LABEL, seed=seed
        )

    critical = lead + span
    return SignalRecord(
        sample_rate=config.sample_rate,
        cat=cat,
        cal=cal,
        label=anomaly.id,
        seed=seed,
        onset_index=lead,
        critical_index=critical,
        recovery_index=critical,
    )


def derive_record_seed(seed: int, label: int, index: int) -> int:
    """由全域種子、標籤與序號導出單筆紀錄種子"""
    state = np.random.SeedSequence([seed, label, index]).generate_state(1)
    return int(state[0])


def _plan(
    labels: Iterable[int], count: int, seed: int, split: str
) -> List[Tuple[int, int, int, str]]:
    prefix = "holdout/" if split == GROUP_HOLDOUT else ""
    plan = []
    for label in labels:
        for index in range(count):
            plan.append(
                (label, index, derive_record_seed(seed, label, index), prefix)
            )
    return plan


async def _generate_dataset_async(
    config: GeneratorConfig,
    jobs: Sequence[Tuple[int, int, int, str, str]],
    out_dir: Path,
    max_concurrent: int,
) -> List[ManifestEntry]:
    semaphore = asyncio.Semaphore(max_concurrent)

    async def run(label: int, index: int, record_seed: int, prefix: str, split: str):
        async with semaphore:
            record = generate_record(label, config, record_seed)
            rel_path = f"{prefix}{label_name(label)}_{index:03d}.csv"
            await write_csv_async(record, out_dir / rel_path)
            return ManifestEntry(
                path=rel_path,
                label=label,
                seed=record_seed,
                onset_index=record.onset_index,
                critical_index=record.critical_index,
                recovery_index=record.recovery_index,
                split=split,
            )

    # gather 保持輸入順序，清單與排程順序無關
    return list(await asyncio.gather(*(run(*job) for job in jobs)))


def generate_dataset(
    config: GeneratorConfig,
    classes: Sequence[ClassSpec],
    records_per_class: int,
    seed: int,
    out_dir: Union[str, Path],
    nominal_records: int = 0,
    holdout_classes: Sequence[ClassSpec] = (),
    holdout_records: int = 0,
    max_concurrent: int = 8,
) -> DatasetManifest:
    """
    產生完整資料集並寫出 CSV 與 manifest.json

    Args:
        config: 產生器配置
        classes: 訓練用異常類別
        records_per_class: 每類紀錄數（類別完全平衡）
        seed: 全域種子
        out_dir: 輸出目錄（data_dir）
        nominal_records: 額外的純正常紀錄數
        holdout_classes: 保留作為未知異常的類別，寫在 out_dir/holdout/
        holdout_records: 每個保留類別的紀錄數
        max_concurrent: 同時寫檔的上限

    Returns:
        DatasetManifest

    Raises:
        DomainError: records_per_class < 1
        ArtifactIOError: 寫檔失敗
    """
    if records_per_class < 1:
        raise DomainError("records_per_class must be >= 1")

    out_dir = Path(out_dir)
    labels = [
        NOMINAL_LABEL if _resolve_class(c) is None else _resolve_class(c).id
        for c in classes
    ]
    holdout_labels = [_resolve_class(c).id for c in holdout_classes]

    jobs = [job + (GROUP_MAIN,) for job in _plan(labels, records_per_class, seed, GROUP_MAIN)]
    if nominal_records and NOMINAL_LABEL not in labels:
        jobs += [
            job + (GROUP_MAIN,)
            for job in _plan([NOMINAL_LABEL], nominal_records, seed, GROUP_MAIN)
        ]
    jobs += [
        job + (GROUP_HOLDOUT,)
        for job in _plan(holdout_labels, holdout_records, seed, GROUP_HOLDOUT)
    ]

    logger.info(
        "Generating %d records (%d classes x %d, %d nominal, %d held out)",
        len(jobs),
        len(labels),
        records_per_class,
        nominal_records,
        len(holdout_labels) * holdout_records,
    )
    entries = asyncio.run(_generate_dataset_async(config, jobs, out_dir, max_concurrent))

    manifest = DatasetManifest(
        seed=seed, entries=entries, generator=dataclasses.asdict(config)
    )
    write_manifest(manifest, out_dir)
    logger.info("Wrote manifest with %d entries to %s", len(manifest), out_dir)
    return manifest
