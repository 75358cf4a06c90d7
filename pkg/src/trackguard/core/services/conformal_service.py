"""
分割式共形預測

分數、校準分位數、預測集合與覆蓋率診斷。預設分數 1 − p_true 會產生空集合，
空集合代表輸入不像任何已校準類別（未知異常）。
"""

import logging
import math
from dataclasses import dataclass
from typing import Collection, Dict, List, Optional, Sequence, Union

import numpy as np

from config.base import ScoreMethod
from src.trackguard.core.models.conformal import CalibrationResult, PredictionSet
from src.trackguard.utils.exceptions import DomainError

logger = logging.getLogger(__name__)

# 浮點誤差容忍：(n+1)(1-α) 剛好是整數時不要多進一位
_K_TOLERANCE = 1e-9
_PROB_SUM_TOLERANCE = 1e-9

MethodLike = Union[ScoreMethod, str]


def _method(method: MethodLike) -> ScoreMethod:
    try:
        return ScoreMethod(method) if not isinstance(method, ScoreMethod) else method
    except ValueError:
        raise DomainError(f"unknown score method {method!r}")


def _as_probs(probs: np.ndarray) -> np.ndarray:
    p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    if p.ndim != 2:
        raise DomainError("probabilities must be a vector or a matrix")
    if p.size and np.any(np.abs(p.sum(axis=1) - 1.0) > _PROB_SUM_TOLERANCE):
        raise DomainError("each probability vector must sum to 1")
    return p


def _mass_above(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """每列中機率嚴格大於真實類別者的總和"""
    p_true = p[np.arange(len(y)), y]
    return np.sum(np.where(p > p_true[:, None], p, 0.0), axis=1)


def _label_indices(labels: Sequence[int], num_classes: int, label_ids) -> np.ndarray:
    if label_ids is not None:
        lookup = {int(label): i for i, label in enumerate(label_ids)}
        try:
            return np.array([lookup[int(label)] for label in labels], dtype=np.int64)
        except KeyError as e:
            raise DomainError(f"label {e.args[0]} is not a model class")
    y = np.asarray(labels, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise DomainError(f"label outside [0, {num_classes})")
    return y


def conformity_scores(
    probs: np.ndarray,
    labels: Sequence[int],
    method: MethodLike = ScoreMethod.ONE_MINUS_TRUE_PROB,
    label_ids: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    一致性分數

    Args:
        probs: [N x C] 機率
        labels: 真實類別；提供 label_ids 時為標籤編號，否則為索引
        method: one_minus_true_prob（1 − p_true）或 adaptive_cumulative
        label_ids: 機率欄位對應的標籤編號

    Returns:
        [0, 1] 內的分數向量
    """
    p = _as_probs(probs)
    y = _label_indices(labels, p.shape[1], label_ids)
    if len(y) != p.shape[0]:
        raise DomainError("probs and labels differ in length")

    p_true = p[np.arange(len(y)), y]
    if _method(method) == ScoreMethod.ADAPTIVE_CUMULATIVE:
        scores = _mass_above(p, y) + p_true
    else:
        scores = 1.0 - p_true
    return np.clip(scores, 0.0, 1.0)


def quantile_rank(n: int, alpha: float) -> int:
    """k = ceil((n+1)(1−α))，至少為 1"""
    return max(1, math.ceil((n + 1) * (1.0 - alpha) - _K_TOLERANCE))


def calibrate(
    scores: Sequence[float],
    alpha: float,
    method: MethodLike = ScoreMethod.ONE_MINUS_TRUE_PROB,
) -> CalibrationResult:
    """
    計算校準分位數 q_hat（第 k 小的分數）

    k > n 時 q_hat = 1 並標記 saturated。

    Raises:
        DomainError: 分數為空、超出 [0, 1] 或 alpha 不在 (0, 1)
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise DomainError("cannot calibrate on an empty score set")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must be in (0, 1)")
    if np.any(~np.isfinite(s)) or s.min() < 0.0 or s.max() > 1.0:
        raise DomainError("scores must lie in [0, 1]")

    n = s.size
    k = quantile_rank(n, alpha)
    if k > n:
        logger.warning(
            "Calibration saturated: k=%d > n_cal=%d at alpha=%s; q_hat set to 1 "
            "(need at least %d calibration examples)",
            k,
            n,
            alpha,
            math.ceil(1.0 / alpha - 1.0),
        )
        return CalibrationResult(
            q_hat=1.0, alpha=alpha, n_cal=n, score_method=_method(method).value, saturated=True
        )

    q_hat = float(np.sort(s, kind="stable")[k - 1])
    logger.debug("Calibrated q_hat=%.6f (k=%d of n=%d, alpha=%s)", q_hat, k, n, alpha)
    return CalibrationResult(
        q_hat=q_hat, alpha=alpha, n_cal=n, score_method=_method(method).value
    )


def _set_mask(p: np.ndarray, q_hat: float, method: ScoreMethod) -> np.ndarray:
    if method == ScoreMethod.ADAPTIVE_CUMULATIVE:
        # 依機率由大到小累加，直到質量達到 q_hat；最可能的類別一定入選
        above = np.sum(np.where(p[:, None, :] > p[:, :, None], p[:, None, :], 0.0), axis=2)
        mask = above < q_hat
        mask[np.arange(p.shape[0]), np.argmax(p, axis=1)] = True
        return mask
    # 與 conformity_scores 相同的分數形式，校準分數等於 q_hat 時一定入選
    return np.clip(1.0 - p, 0.0, 1.0) <= q_hat


def predict_sets(
    probs: np.ndarray,
    calib: CalibrationResult,
    label_ids: Optional[Sequence[int]] = None,
) -> List[PredictionSet]:
    """批次建立預測集合"""
    p = _as_probs(probs)
    ids = tuple(label_ids) if label_ids is not None else tuple(range(p.shape[1]))
    if len(ids) != p.shape[1]:
        raise DomainError("label_ids length does not match probability width")
    mask = _set_mask(p, calib.q_hat, _method(calib.score_method))
    return [
        PredictionSet(
            labels=frozenset(ids[j] for j in np.flatnonzero(row_mask)),
            probs=row,
            q_hat_used=calib.q_hat,
            label_ids=ids,
        )
        for row, row_mask in zip(p, mask)
    ]


def predict_set(
    probs: np.ndarray,
    calib: CalibrationResult,
    label_ids: Optional[Sequence[int]] = None,
) -> PredictionSet:
    """
    單一機率向量的預測集合：{ y : probs[y] ≥ 1 − q_hat }

    空集合代表未知異常；q_hat = 1 時包含所有類別。
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise DomainError("predict_set expects one probability vector")
    return predict_sets(p[None, :], calib, label_ids)[0]


SetLike = Collection[int]


def _check_lengths(sets: Sequence[SetLike], true_labels: Sequence[int]) -> None:
    if len(sets) != len(true_labels):
        raise DomainError(
            f"sets ({len(sets)}) and labels ({len(true_labels)}) differ in length"
        )


def marginal_coverage(sets: Sequence[SetLike], true_labels: Sequence[int]) -> float:
    """包含真實標籤的集合比例"""
    _check_lengths(sets, true_labels)
    if not sets:
        return float("nan")
    return float(np.mean([label in s for s, label in zip(sets, true_labels)]))


def class_conditional_coverage(
    sets: Sequence[SetLike],
    true_labels: Sequence[int],
    classes: Optional[Sequence[int]] = None,
) -> Dict[int, Optional[float]]:
    """各類別的經驗覆蓋率；資料中沒有的類別回傳 None（未定義）"""
    _check_lengths(sets, true_labels)
    classes = sorted(set(true_labels)) if classes is None else list(classes)
    result: Dict[int, Optional[float]] = {}
    for cls in classes:
        hits = [label in s for s, label in zip(sets, true_labels) if label == cls]
        result[cls] = float(np.mean(hits)) if hits else None
    return result


def average_set_size(sets: Sequence[SetLike]) -> float:
    if not sets:
        return float("nan")
    return float(np.mean([len(s) for s in sets]))


def empty_set_rate(sets: Sequence[SetLike]) -> float:
    if not sets:
        return float("nan")
    return float(np.mean([len(s) == 0 for s in sets]))


def set_size_histogram(sets: Sequence[SetLike]) -> Dict[int, int]:
    """集合大小分布，0 到最大值皆列出"""
    sizes = [len(s) for s in sets]
    if not sizes:
        return {}
    counts = np.bincount(sizes)
    return {size: int(count) for size, count in enumerate(counts)}


@dataclass(frozen=True)
class CoverageStudy:
    """重複切分的覆蓋率統計"""

    coverages: List[float]
    n_cal: int
    alpha: float

    @property
    def mean(self) -> float:
        return float(np.mean(self.coverages))

    @property
    def std(self) -> float:
        return float(np.std(self.coverages))

    def validity_band(self, slack: float = 0.005) -> tuple:
        """分割式共形的有效區間 [1−α−slack, 1−α+1/(n+1)+slack]"""
        target = 1.0 - self.alpha
        return (target - slack, min(1.0, target + 1.0 / (self.n_cal + 1) + slack))


def repeated_split_coverage(
    probs: np.ndarray,
    labels: Sequence[int],
    alpha: float,
    n_cal: int,
    repetitions: int = 200,
    seed: int = 0,
    method: MethodLike = ScoreMethod.ONE_MINUS_TRUE_PROB,
    label_ids: Optional[Sequence[int]] = None,
) -> CoverageStudy:
    """
    在合併的分數池上重複隨機切分校準/測試，計算每次的邊際覆蓋率

    Args:
        probs: [N x C] 機率
        labels: 真實類別
        alpha: 允許誤差
        n_cal: 每次切分的校準集大小（其餘為測試集）
        repetitions: 重複次數
        seed: 切分種子
    """
    p = _as_probs(probs)
    y = _label_indices(labels, p.shape[1], label_ids)
    if not 0 < n_cal < len(y):
        raise DomainError("n_cal must leave at least one test example")
    method = _method(method)
    scores = conformity_scores(p, y, method)

    rng = np.random.default_rng(seed)
    coverages = []
    for _ in range(repetitions):
        order = rng.permutation(len(y))
        cal_idx, test_idx = order[:n_cal], order[n_cal:]
        calib = calibrate(scores[cal_idx], alpha, method)
        mask = _set_mask(p[test_idx], calib.q_hat, method)
        coverages.append(float(np.mean(mask[np.arange(len(test_idx)), y[test_idx]])))
    return CoverageStudy(coverages=coverages, n_cal=n_cal, alpha=alpha)
