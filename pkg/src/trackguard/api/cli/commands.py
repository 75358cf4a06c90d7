"""
CLI 指令實作

每個 cmd_* 接收已載入的 RunConfig，回傳產物路徑或結果物件，方便測試直接呼叫。
"""

import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, Optional, TextIO, Tuple, Union

from config.base import RunConfig
from src.trackguard.core.models.conformal import PredictionSet
from src.trackguard.core.models.signal import label_name
from src.trackguard.core.services import conformal_service as conformal
from src.trackguard.core.services.dataset_service import load_windows, split_records
from src.trackguard.core.services.preprocess_service import preprocess_record
from src.trackguard.core.services.report_service import ReportBundle, run_report
from src.trackguard.core.services.signal_generator import generate_dataset
from src.trackguard.infrastructure.ai.classifier import (
    ClassifierModel,
    predict_proba,
    train,
)
from src.trackguard.infrastructure.storage.calibration_store import (
    load_calibration,
    save_calibration,
)
from src.trackguard.infrastructure.storage.csv_store import (
    MANIFEST_FILENAME,
    read_csv,
    read_manifest,
)
from src.trackguard.infrastructure.storage.model_store import (
    load_model,
    save_model,
    write_training_log,
)
from src.trackguard.infrastructure.storage.window_store import write_window_csv
from src.trackguard.utils.exceptions import ArtifactIOError, ConfigurationError
from src.trackguard.utils.logging_setup import status

logger = logging.getLogger(__name__)

LOCK_FILENAME = ".trackguard.lock"


def training_log_path(config: RunConfig) -> Path:
    model_path = Path(config.paths.model_path)
    return model_path.parent / f"{model_path.stem}_training_log.csv"


def _check_model_matches(model: ClassifierModel, config: RunConfig) -> None:
    expected = 2 * config.preprocess.window_len
    if model.input_dim != expected:
        raise ConfigurationError(
            f"model expects input_dim {model.input_dim} but preprocess.window_len "
            f"{config.preprocess.window_len} gives {expected}"
        )


@contextmanager
def directory_lock(directory: Union[str, Path]) -> Iterator[Path]:
    """目錄鎖：同一時間只允許一個指令寫入"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lock_path = directory / LOCK_FILENAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ArtifactIOError(
            str(lock_path), "directory is locked by another trackguard run"
        )
    except OSError as e:
        raise ArtifactIOError(str(lock_path), f"cannot create lock ({e.strerror})")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield lock_path
    finally:
        try:
            lock_path.unlink()
        except OSError:
            pass


def cmd_generate(config: RunConfig) -> Path:
    """產生資料集，回傳 manifest 路徑"""
    dataset = config.dataset
    status(f"🔄 產生資料集 → {config.paths.data_dir}")
    manifest = generate_dataset(
        config.generator,
        dataset.classes,
        dataset.records_per_class,
        config.seed,
        config.paths.data_dir,
        nominal_records=dataset.nominal_records,
        holdout_classes=dataset.holdout_classes,
        holdout_records=dataset.holdout_records,
    )
    status(f"✅ 已寫出 {len(manifest)} 筆紀錄")
    return Path(config.paths.data_dir) / MANIFEST_FILENAME


def cmd_train(config: RunConfig, dump_windows: bool = False) -> Tuple[Path, Path]:
    """訓練分類器，回傳 (模型路徑, 訓練紀錄路徑)"""
    data_dir = config.paths.data_dir
    manifest = read_manifest(data_dir)
    splits = split_records(manifest.main_entries(), config.train.split, config.seed)

    train_windows = load_windows(splits["train"], data_dir, config.preprocess)
    holdout = load_windows(splits["calibration"], data_dir, config.preprocess)

    if dump_windows:
        window_dir = Path(data_dir) / "windows"
        write_window_csv(train_windows, window_dir / "train.csv")
        write_window_csv(holdout, window_dir / "calibration.csv")
        write_window_csv(
            load_windows(splits["test"], data_dir, config.preprocess),
            window_dir / "test.csv",
        )

    status(f"🤖 訓練分類器（{len(train_windows)} 個視窗）")
    model, log = train(train_windows, config.train, seed=config.train_seed, holdout=holdout)
    model.metadata = {
        "window_len": config.preprocess.window_len,
        "stride": config.preprocess.stride,
        "smooth_radius": config.preprocess.smooth_radius,
        "label_rule": config.preprocess.label_rule.value,
    }

    model_path = save_model(model, config.paths.model_path)
    log_path = write_training_log(log, training_log_path(config))
    status(f"✅ 模型已儲存：{model_path}")
    return model_path, log_path


def cmd_calibrate(config: RunConfig) -> Path:
    """在校準切分上計算 q_hat，回傳校準檔路徑"""
    data_dir = config.paths.data_dir
    model = load_model(config.paths.model_path)
    _check_model_matches(model, config)

    manifest = read_manifest(data_dir)
    splits = split_records(manifest.main_entries(), config.train.split, config.seed)
    windows = load_windows(splits["calibration"], data_dir, config.preprocess)
    if not windows:
        raise ConfigurationError("calibration split produced no windows")

    method = config.conformal.score_method
    scores = conformal.conformity_scores(
        predict_proba(model, windows),
        [w.label for w in windows],
        method,
        label_ids=model.label_ids,
    )
    calib = conformal.calibrate(scores, config.conformal.alpha, method)
    path = save_calibration(calib, config.paths.calib_path)
    status(f"✅ 校準完成：q_hat={calib.q_hat:.6f}（n_cal={calib.n_cal}）")
    return path


def cmd_evaluate(config: RunConfig) -> ReportBundle:
    """產生評估報告"""
    model = load_model(config.paths.model_path)
    _check_model_matches(model, config)
    calib = load_calibration(config.paths.calib_path)
    manifest = read_manifest(config.paths.data_dir)

    with directory_lock(config.paths.report_dir):
        bundle = run_report(
            manifest,
            config.paths.data_dir,
            model,
            calib,
            config,
            config.paths.report_dir,
        )
    status(f"📊 報告已寫出：{config.paths.report_dir}")
    return bundle


@dataclass
class PredictionSummary:
    """cmd_predict 的彙總"""

    windows: int = 0
    empty_sets: int = 0
    singletons: int = 0
    label_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def empty_fraction(self) -> float:
        return self.empty_sets / self.windows if self.windows else 0.0

    @property
    def singleton_fraction(self) -> float:
        return self.singletons / self.windows if self.windows else 0.0

    def majority_singleton(self) -> Optional[str]:
        if not self.label_counts:
            return None
        return max(sorted(self.label_counts), key=lambda name: self.label_counts[name])


def format_prediction_set(prediction: PredictionSet) -> str:
    names = [label_name(label) for label in sorted(prediction.labels)]
    return "{" + "|".join(names) + "}"


def cmd_predict(
    config: RunConfig, csv_path: Union[str, Path], out: Optional[TextIO] = None
) -> PredictionSummary:
    """
    對單一紀錄逐視窗輸出預測集合

    stdout 每行：start_index,prediction_set,probabilities
    """
    out = out or sys.stdout
    model = load_model(config.paths.model_path)
    _check_model_matches(model, config)
    calib = load_calibration(config.paths.calib_path)
    record = read_csv(csv_path)

    windows = preprocess_record(record, config.preprocess, source_id=Path(csv_path).stem)
    probs = predict_proba(model, windows)
    sets = conformal.predict_sets(probs, calib, model.label_ids)

    summary = PredictionSummary(windows=len(sets))
    out.write("# labels=" + ";".join(label_name(label) for label in model.label_ids) + "\n")
    out.write("start_index,prediction_set,probabilities\n")
    for window, prediction in zip(windows, sets):
        probabilities = ";".join(f"{p:.6f}" for p in prediction.probs)
        out.write(
            f"{window.start_index},{format_prediction_set(prediction)},{probabilities}\n"
        )
        if prediction.is_empty:
            summary.empty_sets += 1
        elif prediction.is_singleton:
            summary.singletons += 1
            name = label_name(next(iter(prediction.labels)))
            summary.label_counts[name] = summary.label_counts.get(name, 0) + 1

    out.write(
        f"# summary windows={summary.windows};"
        f"empty_set_fraction={summary.empty_fraction:.6f};"
        f"singleton_fraction={summary.singleton_fraction:.6f};"
        f"majority_singleton={summary.majority_singleton() or 'none'}\n"
    )
    out.flush()
    return summary
