"""
Unit tests for data models - 資料模型測試
"""

import numpy as np
import pytest

from src.trackguard.core.models import (
    ANOMALY_CATALOG,
    ChannelScope,
    EnvelopeKind,
    PulseWindow,
    SignalRecord,
    get_anomaly_class,
    label_name,
    parse_label_name,
)
from src.trackguard.core.models.dataset import DatasetManifest, ManifestEntry
from src.trackguard.core.models.evaluation import ConfusionMatrix
from src.trackguard.core.models.window import stack_windows
from src.trackguard.utils.exceptions import DomainError


class TestAnomalyCatalog:
    """異常類別目錄測試"""

    @pytest.mark.unit
    def test_eleven_classes(self):
        assert sorted(ANOMALY_CATALOG) == list(range(1, 12))

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "class_id,scope",
        [
            (3, ChannelScope.UPSTREAM),
            (11, ChannelScope.UPSTREAM),
            (2, ChannelScope.DOWNSTREAM),
            (10, ChannelScope.DOWNSTREAM),
            (7, ChannelScope.DOWNSTREAM),
            (9, ChannelScope.UPSTREAM),
            (1, ChannelScope.BOTH),
            (5, ChannelScope.BOTH),
        ],
    )
    def test_channel_mapping(self, class_id, scope):
        assert get_anomaly_class(class_id).affected_channel == scope

    @pytest.mark.unit
    def test_envelope_kinds(self):
        assert get_anomaly_class(10).envelope_kind == EnvelopeKind.STEP
        assert get_anomaly_class(6).envelope_kind == EnvelopeKind.INTERMITTENT
        assert get_anomaly_class(7).envelope_kind == EnvelopeKind.PROGRESSIVE_LINEAR

    @pytest.mark.unit
    def test_unknown_class(self):
        with pytest.raises(DomainError):
            get_anomaly_class(12)

    @pytest.mark.unit
    def test_label_names(self):
        assert label_name(0) == "nominal"
        assert label_name(10) == "anomaly_10"
        assert parse_label_name("anomaly_10") == 10
        assert parse_label_name("nominal") == 0
        for bad in ("anomaly_0", "anomaly_12", "Anomaly_3", "anomaly_x"):
            with pytest.raises(DomainError):
                parse_label_name(bad)


class TestSignalRecord:
    """SignalRecord 驗證測試"""

    @pytest.mark.unit
    def test_nominal_without_indices(self):
        record = SignalRecord(sample_rate=50, cat=[1.0, 1.0], cal=[1.0, 1.0], label=0, seed=1)
        assert record.is_nominal
        assert len(record) == 2

    @pytest.mark.unit
    def test_nominal_with_indices_rejected(self):
        with pytest.raises(DomainError):
            SignalRecord(
                sample_rate=50, cat=[1.0] * 4, cal=[1.0] * 4, label=0, seed=1, onset_index=1,
                critical_index=2, recovery_index=2,
            )

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "onset,critical,recovery",
        [(None, 3, 3), (3, 3, 3), (1, 3, 2), (1, 3, 5)],
    )
    def test_invalid_phase_indices(self, onset, critical, recovery):
        with pytest.raises(DomainError):
            SignalRecord(
                sample_rate=50, cat=[1.0] * 4, cal=[1.0] * 4, label=3, seed=1,
                onset_index=onset, critical_index=critical, recovery_index=recovery,
            )

    @pytest.mark.unit
    def test_channels_must_match(self):
        with pytest.raises(DomainError):
            SignalRecord(sample_rate=50, cat=[1.0, 2.0], cal=[1.0], label=0, seed=1)
        with pytest.raises(DomainError):
            SignalRecord(sample_rate=50, cat=[1.0, np.inf], cal=[1.0, 1.0], label=0, seed=1)

    @pytest.mark.unit
    def test_equality_compares_samples(self):
        a = SignalRecord(sample_rate=50, cat=[1.0, 2.0], cal=[1.0, 1.0], label=0, seed=1)
        b = SignalRecord(sample_rate=50, cat=[1.0, 2.0], cal=[1.0, 1.0], label=0, seed=1)
        c = SignalRecord(sample_rate=50, cat=[1.0, 2.5], cal=[1.0, 1.0], label=0, seed=1)
        assert a == b
        assert a != c


class TestPulseWindow:
    """PulseWindow 測試"""

    @pytest.mark.unit
    def test_stage_fraction_only_for_anomalies(self):
        with pytest.raises(DomainError):
            PulseWindow(cat=[1.0], cal=[1.0], source_id="a", start_index=0, label=0, stage_fraction=0.1)
        with pytest.raises(DomainError):
            PulseWindow(cat=[1.0], cal=[1.0], source_id="a", start_index=0, label=3)

    @pytest.mark.unit
    def test_flatten_and_stack(self):
        w = PulseWindow(cat=[1.0, 2.0], cal=[3.0, 4.0], source_id="a", start_index=8, label=0)
        np.testing.assert_array_equal(w.flatten(), [1.0, 2.0, 3.0, 4.0])
        assert w.center_index == 9
        assert stack_windows([w, w]).shape == (2, 4)


class TestManifestAndMatrix:
    """清單與混淆矩陣模型測試"""

    @pytest.mark.unit
    def test_manifest_groups(self):
        manifest = DatasetManifest(
            seed=1,
            entries=[
                ManifestEntry(path="anomaly_3_000.csv", label=3, seed=5),
                ManifestEntry(path="nominal_000.csv", label=0, seed=6),
                ManifestEntry(path="holdout/anomaly_6_000.csv", label=6, seed=7, split="holdout"),
            ],
        )
        assert manifest.labels() == [0, 3]
        assert [e.record_id for e in manifest.holdout_entries()] == ["anomaly_6_000"]
        assert manifest.to_dict()["records"][0]["label"] == "anomaly_3"

    @pytest.mark.unit
    def test_confusion_matrix(self):
        matrix = ConfusionMatrix(counts=np.array([[3, 1], [0, 0]]), label_ids=(0, 3))
        assert matrix.total == 4
        assert matrix.accuracy == 0.75
        assert matrix.names() == ["nominal", "anomaly_3"]
        assert np.isnan(matrix.normalized()[1]).all()
