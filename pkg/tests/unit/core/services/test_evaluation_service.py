"""
Unit tests for evaluation service - 評估與早期偵測測試
"""

import numpy as np
import pytest

from config.base import DetectionMode, GeneratorConfig, PreprocessConfig
from src.trackguard.core.models.conformal import CalibrationResult
from src.trackguard.core.models.evaluation import EarlinessEntry, EarlinessReport
from src.trackguard.core.models.signal import SignalRecord
from src.trackguard.core.models.window import PulseWindow
from src.trackguard.core.services import evaluation_service as evaluation
from src.trackguard.core.services.signal_generator import generate_record
from src.trackguard.infrastructure.ai.classifier import (
    Activation,
    ClassifierModel,
    LayerSpec,
)
from src.trackguard.utils.exceptions import ConfigurationError, DomainError


def constant_model(input_dim, label_ids, favored):
    """權重全零、偏差偏向 favored 的單層模型"""
    bias = np.zeros(len(label_ids))
    bias[list(label_ids).index(favored)] = 5.0
    return ClassifierModel(
        arch=[LayerSpec(input_dim, len(label_ids), Activation.IDENTITY)],
        weights=[np.zeros((input_dim, len(label_ids)))],
        biases=[bias],
        label_ids=tuple(label_ids),
        rng_seed=0,
    )


def window(label, stage=None, length=8):
    return PulseWindow(
        cat=np.linspace(0, 1, length),
        cal=np.linspace(1, 0, length),
        source_id="w",
        start_index=0,
        label=label,
        stage_fraction=stage if label else None,
    )


class TestConfusionAndAccuracy:
    """混淆矩陣與準確率測試"""

    @pytest.mark.unit
    def test_all_correct_gives_identity(self):
        matrix = evaluation.confusion_from_labels([1, 2, 2, 3], [1, 2, 2, 3], [1, 2, 3])
        np.testing.assert_array_equal(matrix.normalized(), np.eye(3))
        assert matrix.accuracy == 1.0

    @pytest.mark.unit
    def test_constant_classifier_on_balanced_data(self):
        label_ids = [1, 2, 3, 4, 5, 7, 8, 9, 10, 11]
        windows = [window(label, 0.5) for label in label_ids for _ in range(4)]
        model = constant_model(16, label_ids, favored=1)

        matrix, accuracy = evaluation.evaluate_classifier(model, windows)

        assert accuracy == pytest.approx(0.1)
        assert matrix.total == 40
        assert matrix.counts[:, 0].sum() == 40
        assert np.trace(matrix.counts) / matrix.total == accuracy

    @pytest.mark.unit
    def test_unknown_label_rejected(self):
        with pytest.raises(DomainError):
            evaluation.confusion_from_labels([1, 6], [1, 1], [1, 2])

    @pytest.mark.unit
    def test_empty_test_set(self):
        with pytest.raises(DomainError):
            evaluation.evaluate_classifier(constant_model(16, [1, 2], 1), [])

    @pytest.mark.unit
    def test_missing_class_row_is_undefined(self):
        matrix = evaluation.confusion_from_labels([1, 1], [1, 2], [1, 2])
        normalized = matrix.normalized()
        np.testing.assert_allclose(normalized[0], [0.5, 0.5])
        assert np.all(np.isnan(normalized[1]))


class TestFirstRun:
    """first_run 測試"""

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "hits,m,expected",
        [
            ([False, True, True, True, False], 3, 1),
            ([True, False, True, True], 2, 2),
            ([True, True, False, True], 3, None),
            ([], 1, None),
            ([False, True], 1, 1),
        ],
    )
    def test_runs(self, hits, m, expected):
        assert evaluation.first_run(hits, m) == expected

    @pytest.mark.unit
    def test_m_must_be_positive(self):
        with pytest.raises(DomainError):
            evaluation.first_run([True], 0)


class TestThresholdBaseline:
    """傳統門檻基準測試"""

    @pytest.mark.unit
    def test_ideal_step_detected_at_first_covering_window(self):
        config = GeneratorConfig(
            nominal_lead_samples=200,
            anomaly_samples=800,
            nominal_tail_samples=100,
            noise_sigma=0.0,
            ripple_depth=0.0,
            step_position=0.0,
        )
        record = generate_record(10, config, seed=1)
        stats = evaluation.nominal_stats(record)

        detection = evaluation.threshold_baseline_detect(
            record, stats, k=3.0, m=1, window_len=32, stride=16
        )

        # 第一個含 onset 之後樣本（索引 201）的視窗起點為 176
        assert detection == 176 + 16

    @pytest.mark.unit
    def test_lead_excursion_ignored_when_searching_from_onset(self):
        config = GeneratorConfig(
            nominal_lead_samples=200,
            anomaly_samples=800,
            nominal_tail_samples=100,
            noise_sigma=0.01,
            ripple_depth=0.0,
            step_position=0.0,
        )
        clean = generate_record(10, config, seed=1)
        stats = evaluation.nominal_stats(clean)
        cat = clean.cat.copy()
        cat[40:120] += 1.0
        record = SignalRecord(
            sample_rate=clean.sample_rate, cat=cat, cal=clean.cal, label=10, seed=1,
            onset_index=clean.onset_index, critical_index=clean.critical_index,
            recovery_index=clean.recovery_index,
        )

        from_start = evaluation.threshold_baseline_detect(
            record, stats, k=3.0, m=1, window_len=32, stride=16
        )
        from_onset = evaluation.threshold_baseline_detect(
            record, stats, k=3.0, m=1, window_len=32, stride=16, search_from=200
        )

        assert from_start < 200 - 32
        assert from_onset == 176 + 16

    @pytest.mark.unit
    def test_nominal_records_rarely_fire(self):
        config = GeneratorConfig()
        fired = 0
        for seed in range(20):
            record = generate_record(None, config, seed=seed)
            stats = evaluation.nominal_stats(record)
            detection = evaluation.threshold_baseline_detect(
                record, stats, k=3.0, m=3, window_len=64, stride=16
            )
            fired += detection is not None
        assert fired <= 1

    @pytest.mark.slow
    def test_false_positive_rate_over_hundred_seeds(self):
        config = GeneratorConfig()
        fired = 0
        for seed in range(1000, 1100):
            record = generate_record(None, config, seed=seed)
            detection = evaluation.threshold_baseline_detect(
                record, evaluation.nominal_stats(record), k=3.0, m=3, window_len=64, stride=16
            )
            fired += detection is not None
        assert fired <= 5

    @pytest.mark.unit
    def test_progressive_exponential_detected_late(self):
        config = GeneratorConfig()
        record = generate_record(3, config, seed=4)
        stats = evaluation.nominal_stats(record)

        detection = evaluation.threshold_baseline_detect(
            record, stats, k=3.0, m=3, window_len=64, stride=16
        )

        assert detection is not None
        earliness = evaluation.earliness_percent(
            detection, record.onset_index, record.critical_index
        )
        assert earliness > 50.0

    @pytest.mark.unit
    def test_short_nominal_lead_rejected(self):
        samples = np.ones(100)
        record = SignalRecord(
            sample_rate=50, cat=samples, cal=samples, label=3, seed=0,
            onset_index=10, critical_index=90, recovery_index=90,
        )
        with pytest.raises(ConfigurationError):
            evaluation.nominal_stats(record)

    @pytest.mark.unit
    def test_stats_use_sample_sigma(self):
        record = generate_record(None, GeneratorConfig(), seed=2)
        stats = evaluation.nominal_stats(record, lead_samples=500)
        assert stats.n_samples == 500
        assert stats.sigma[0] == pytest.approx(record.cat[:500].std(ddof=1))


class TestModelDetection:
    """模型首次偵測測試"""

    def setup_method(self):
        self.preprocess = PreprocessConfig(window_len=32, stride=16, smooth_radius=2)
        self.generator = GeneratorConfig(
            nominal_lead_samples=200, anomaly_samples=800, nominal_tail_samples=100
        )
        self.record = generate_record(3, self.generator, seed=5)
        self.model = constant_model(64, [0, 3], favored=3)
        self.calib = CalibrationResult(q_hat=0.1, alpha=0.1, n_cal=100)

    def _centers(self):
        starts = range(0, len(self.record) - 32 + 1, 16)
        return [s + 16 for s in starts]

    @pytest.mark.unit
    def test_ideal_detector_fires_at_onset(self, mocker):
        centers = self._centers()
        mocker.patch.object(
            evaluation,
            "window_hits",
            return_value=[self.record.onset_index <= c < self.record.critical_index for c in centers],
        )
        detection = evaluation.model_first_detection(
            self.model, self.calib, self.record, 1, self.preprocess
        )
        first_center = min(c for c in centers if c >= self.record.onset_index)

        assert detection == first_center
        assert evaluation.earliness_percent(
            detection, self.record.onset_index, self.record.critical_index
        ) == pytest.approx(0.0, abs=2.0)

    @pytest.mark.unit
    def test_persistence_counts_runs(self, mocker):
        centers = self._centers()
        onset_window = centers.index(min(c for c in centers if c >= self.record.onset_index))
        hits = [False] * len(centers)
        for i in range(onset_window + 1, onset_window + 4):
            hits[i] = True
        mocker.patch.object(evaluation, "window_hits", return_value=hits)

        detection = evaluation.model_first_detection(
            self.model, self.calib, self.record, 3, self.preprocess
        )
        assert detection == centers[onset_window + 1]

    @pytest.mark.unit
    def test_run_starting_after_critical_is_none(self, mocker):
        centers = self._centers()
        mocker.patch.object(
            evaluation,
            "window_hits",
            return_value=[c >= self.record.critical_index for c in centers],
        )
        assert (
            evaluation.model_first_detection(
                self.model, self.calib, self.record, 1, self.preprocess
            )
            is None
        )

    @pytest.mark.unit
    def test_larger_m_never_earlier(self, rng, mocker):
        hits = list(rng.random(len(self._centers())) < 0.6)
        mocker.patch.object(evaluation, "window_hits", return_value=hits)

        detections = [
            evaluation.model_first_detection(
                self.model, self.calib, self.record, m, self.preprocess
            )
            for m in range(1, 6)
        ]
        for shorter, longer in zip(detections, detections[1:]):
            if longer is not None:
                assert shorter is not None
                assert longer >= shorter

    @pytest.mark.unit
    def test_constant_model_starts_at_onset_window(self):
        """常數模型在每個視窗都命中，但正常前段的命中不算偵測"""
        detection = evaluation.model_first_detection(
            self.model, self.calib, self.record, 3, self.preprocess
        )
        # 第一個含 onset 之後取樣的視窗起點為 176（176 + 32 > 200）
        assert detection == 176 + 16
        entry = evaluation.earliness_entry("r", self.record, evaluation.METHOD_MODEL, detection)
        assert entry.premature
        assert entry.earliness_percent is None
        assert entry.summary_percent == 0.0

    @pytest.mark.unit
    def test_nominal_lead_false_alarm_not_credited(self, mocker):
        """只在正常前段命中、onset 之後從未辨識的紀錄計為 100%"""
        centers = self._centers()
        mocker.patch.object(
            evaluation, "window_hits", return_value=[c in (16, 32, 48) for c in centers]
        )

        detection = evaluation.model_first_detection(
            self.model, self.calib, self.record, 3, self.preprocess
        )
        entry = evaluation.earliness_entry("r", self.record, evaluation.METHOD_MODEL, detection)
        report = EarlinessReport(entries=[entry])

        assert detection is None
        assert not entry.premature
        assert entry.summary_percent == 100.0
        assert report.method_mean(evaluation.METHOD_MODEL) == 100.0

    @pytest.mark.unit
    def test_run_crossing_into_onset_counts_from_first_overlapping_window(self, mocker):
        centers = self._centers()
        # 命中從中心 160 持續到 240；前兩個視窗完全在正常前段
        mocker.patch.object(
            evaluation, "window_hits", return_value=[160 <= c <= 240 for c in centers]
        )

        detection = evaluation.model_first_detection(
            self.model, self.calib, self.record, 3, self.preprocess
        )
        assert detection == 192

    @pytest.mark.unit
    def test_argmax_mode(self):
        hits = evaluation.window_hits(
            self.model,
            CalibrationResult(q_hat=0.0, alpha=0.1, n_cal=10),
            [window(3, 0.5, length=32)],
            3,
            mode=DetectionMode.ARGMAX,
        )
        assert hits == [True]

    @pytest.mark.unit
    def test_nominal_record_rejected(self):
        nominal = generate_record(None, self.generator, seed=1)
        with pytest.raises(DomainError):
            evaluation.model_first_detection(
                self.model, self.calib, nominal, 1, self.preprocess
            )

    @pytest.mark.unit
    def test_class_not_in_model_rejected(self):
        other = generate_record(10, self.generator, seed=1)
        with pytest.raises(DomainError):
            evaluation.model_first_detection(
                self.model, self.calib, other, 1, self.preprocess
            )


class TestEarliness:
    """早期度測試"""

    @pytest.mark.unit
    def test_boundaries(self):
        assert evaluation.earliness_percent(100, 100, 300) == 0.0
        assert evaluation.earliness_percent(200, 100, 300) == 50.0
        assert evaluation.earliness_percent(300, 100, 300) is None
        assert evaluation.earliness_percent(99, 100, 300) is None
        assert evaluation.earliness_percent(None, 100, 300) is None

    @pytest.mark.unit
    def test_onset_must_precede_critical(self):
        with pytest.raises(DomainError):
            evaluation.earliness_percent(5, 10, 10)

    @pytest.mark.unit
    def test_summary_scoring(self):
        report = EarlinessReport(
            entries=[
                EarlinessEntry("a", 3, "model", 150, 25.0),
                EarlinessEntry("b", 3, "model", None, None),
                EarlinessEntry("a", 3, "threshold", 250, 75.0),
                EarlinessEntry("c", 10, "threshold", 20, None, premature=True),
            ]
        )
        summary = report.summary()

        assert summary["model"] == {3: 62.5}
        assert summary["threshold"] == {3: 75.0, 10: 0.0}
        assert report.method_mean("threshold", labels=[3]) == 75.0
        assert np.isnan(report.method_mean("unknown"))

    @pytest.mark.unit
    def test_dominance_violations(self):
        report = EarlinessReport(
            entries=[
                EarlinessEntry("a", 3, "model", 150, 25.0),
                EarlinessEntry("a", 3, "threshold", 250, 75.0),
                EarlinessEntry("b", 3, "model", 280, 90.0),
                EarlinessEntry("b", 3, "threshold", 200, 50.0),
                EarlinessEntry("c", 3, "model", None, None),
                EarlinessEntry("c", 3, "threshold", 200, 50.0),
            ]
        )
        assert evaluation.dominance_violations(report) == ["b"]

    @pytest.mark.unit
    def test_report_orders_records_and_skips_nominal(self, mocker):
        generator = GeneratorConfig(
            nominal_lead_samples=200, anomaly_samples=800, nominal_tail_samples=100
        )
        preprocess = PreprocessConfig(window_len=32, stride=16)
        records = [
            ("z", generate_record(3, generator, seed=1)),
            ("n", generate_record(None, generator, seed=1)),
            ("a", generate_record(3, generator, seed=2)),
        ]
        mocker.patch.object(evaluation, "window_hits", side_effect=lambda *a, **k: [False] * 67)
        model = constant_model(64, [0, 3], favored=0)
        calib = CalibrationResult(q_hat=0.1, alpha=0.1, n_cal=100)

        report = evaluation.build_earliness_report(records, model, calib, preprocess, 3.0, 3)

        assert [(e.record_id, e.method) for e in report.entries] == [
            ("a", "model"),
            ("a", "threshold"),
            ("z", "model"),
            ("z", "threshold"),
        ]
        assert all(e.first_detection_index is None for e in report.entries if e.method == "model")


class TestStageAccuracy:
    """分階段準確率測試"""

    @pytest.mark.unit
    def test_bins(self):
        model = constant_model(16, [0, 3, 10], favored=3)
        windows = [window(3, 0.1), window(10, 0.2), window(3, 0.5), window(3, 1.0), window(0)]

        bins = evaluation.stage_accuracy(model, windows, bins=2)

        assert [(b.lower, b.upper, b.n) for b in bins] == [(0.0, 0.5, 2), (0.5, 1.0, 2)]
        assert bins[0].accuracy == 0.5
        assert bins[1].accuracy == 1.0

    @pytest.mark.unit
    def test_empty_bin_undefined(self):
        model = constant_model(16, [0, 3], favored=3)
        bins = evaluation.stage_accuracy(model, [window(3, 0.9)], bins=3)
        assert [b.accuracy for b in bins] == [None, None, 1.0]
