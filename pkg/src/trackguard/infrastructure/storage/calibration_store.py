"""校準檔（JSON 文字）讀寫"""

import json
import logging
from pathlib import Path
from typing import Union

from config.base import ScoreMethod
from src.trackguard.core.models.conformal import CalibrationResult
from src.trackguard.utils.exceptions import ArtifactIOError, DataFormatError, ModelVersionError

logger = logging.getLogger(__name__)

CALIBRATION_VERSION = "trackguard-calibration/1"


def save_calibration(calib: CalibrationResult, path: Union[str, Path]) -> Path:
    path = Path(path)
    payload = {
        "version": CALIBRATION_VERSION,
        "alpha": calib.alpha,
        "n_cal": calib.n_cal,
        "q_hat": calib.q_hat,
        "score_method": calib.score_method,
        "saturated": calib.saturated,
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot write calibration ({e.strerror})")
    logger.info("Saved calibration (q_hat=%r) to %s", calib.q_hat, path)
    return path


def load_calibration(path: Union[str, Path]) -> CalibrationResult:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), f"cannot read calibration ({e.strerror})")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"corrupt calibration file ({e.msg})", str(path), e.lineno)
    if not isinstance(data, dict):
        raise DataFormatError("calibration file must hold a JSON object", str(path))

    if data.get("version") != CALIBRATION_VERSION:
        raise ModelVersionError(
            f"expected {CALIBRATION_VERSION}, got {data.get('version')!r}",
            str(path),
            field="version",
        )
    for key in ("alpha", "n_cal", "q_hat", "score_method", "saturated"):
        if key not in data:
            raise DataFormatError("missing field", str(path), field=key)

    q_hat = data["q_hat"]
    if not isinstance(q_hat, (int, float)) or not 0.0 <= q_hat <= 1.0:
        raise DataFormatError("q_hat must be a number in [0, 1]", str(path), field="q_hat")
    alpha = data["alpha"]
    if not isinstance(alpha, (int, float)) or not 0.0 < alpha < 1.0:
        raise DataFormatError("alpha must be in (0, 1)", str(path), field="alpha")
    try:
        ScoreMethod(data["score_method"])
    except ValueError:
        raise DataFormatError("unknown score method", str(path), field="score_method")

    return CalibrationResult(
        q_hat=float(q_hat),
        alpha=float(alpha),
        n_cal=int(data["n_cal"]),
        score_method=data["score_method"],
        saturated=bool(data["saturated"]),
    )
