import numpy as np
import pytest

from detsched.datastore import (
    FULLTRAIN,
    HOLDOUT,
    DatasetError,
    DetectorSpec,
    FoldManifest,
    FrameRecord,
    MissingPredictionError,
    ObservationPayload,
    PredictionRecord,
    PredictionStore,
    Sequence,
    load_predictions,
    load_sequences,
    save_predictions,
    save_sequences,
    select_variant,
)
from detsched.metrics import BoundingBox, Detection, DetectionSet


def make_frame(seq_id, idx, n_boxes=1):
    boxes = tuple(
        BoundingBox(10.0 * i, 10.0 * i, 10.0 * i + 5.0, 10.0 * i + 5.0, i % 2)
        for i in range(n_boxes)
    )
    obs = ObservationPayload(feature_vector=(0.5, 0.1 * idx, 0.3))
    return FrameRecord(seq_id, idx, obs, boxes)


def make_sequence(seq_id, length, n_boxes=1):
    return Sequence(seq_id, tuple(make_frame(seq_id, i, n_boxes) for i in range(length)))


def make_detections(conf=0.9):
    return DetectionSet((Detection(BoundingBox(0, 0, 5, 5, 0), conf),))


class TestObservationPayload:
    def test_requires_some_content(self):
        with pytest.raises(DatasetError):
            ObservationPayload()

    def test_image_shape_checked(self):
        with pytest.raises(DatasetError):
            ObservationPayload(gray_image=np.zeros((10, 10)))

    def test_image_range_checked(self):
        img = np.zeros((84, 84))
        img[0, 0] = 1.5
        with pytest.raises(DatasetError):
            ObservationPayload(gray_image=img)

    def test_features_prefer_vector(self):
        obs = ObservationPayload(feature_vector=(0.1, 0.2), gray_image=np.zeros((84, 84)))
        assert obs.features().tolist() == [0.1, 0.2]

    def test_image_features_are_pooled(self):
        obs = ObservationPayload(gray_image=np.full((84, 84), 0.25))
        feats = obs.features()
        assert feats.shape == (144,)
        assert np.allclose(feats, 0.25)

    def test_mean_intensity(self):
        obs = ObservationPayload(feature_vector=(0.4, 0.0))
        assert obs.mean_intensity() == pytest.approx(102.0)
        img_obs = ObservationPayload(gray_image=np.full((84, 84), 0.2))
        assert img_obs.mean_intensity() == pytest.approx(51.0)


class TestSequenceValidation:
    def test_two_sequences_of_five_frames(self, tmp_path):
        path = tmp_path / "frames.jsonl"
        seqs = [make_sequence("b", 5), make_sequence("a", 5)]
        save_sequences(path, seqs)
        loaded = load_sequences(path)
        assert [s.sequence_id for s in loaded] == ["a", "b"]
        assert all(len(s) == 5 for s in loaded)

    def test_gap_in_frame_indices_rejected(self, tmp_path):
        path = tmp_path / "frames.jsonl"
        frames = [make_frame("s", 0), make_frame("s", 1), make_frame("s", 3)]
        with open(path, "w") as fh:
            from detsched.datastore import frame_to_json_line

            for f in frames:
                fh.write(frame_to_json_line(f) + "\n")
        with pytest.raises(DatasetError, match="expected frame index 2"):
            load_sequences(path)

    def test_malformed_line_carries_line_number(self, tmp_path):
        path = tmp_path / "frames.jsonl"
        from detsched.datastore import frame_to_json_line

        with open(path, "w") as fh:
            fh.write(frame_to_json_line(make_frame("s", 0)) + "\n")
            fh.write("{not json\n")
        with pytest.raises(DatasetError, match=":2"):
            load_sequences(path)

    def test_round_trip_is_byte_identical(self, tmp_path):
        path1 = tmp_path / "a.jsonl"
        path2 = tmp_path / "b.jsonl"
        seqs = [make_sequence("s", 4, n_boxes=3)]
        save_sequences(path1, seqs)
        save_sequences(path2, load_sequences(path1))
        assert path1.read_bytes() == path2.read_bytes()

    def test_image_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = np.round(rng.uniform(0, 1, size=(84, 84)), 3)
        obs = ObservationPayload(feature_vector=(0.5,), gray_image=img)
        frame = FrameRecord("s", 0, obs, (BoundingBox(0, 0, 2, 2, 0),))
        path = tmp_path / "frames.jsonl"
        save_sequences(path, [Sequence("s", (frame,))])
        loaded = load_sequences(path)[0].frames[0]
        assert loaded.observation == obs


class TestPredictionStore:
    def detectors(self):
        return (
            DetectorSpec("fast", "rgb", 0),
            DetectorSpec("slow", "rgb", 3),
        )

    def test_ingest_and_get(self, tmp_path):
        seq = make_sequence("s", 10)
        store = PredictionStore(self.detectors())
        records = [
            PredictionRecord("s", i, "fast", FULLTRAIN, make_detections())
            for i in range(10)
        ]
        path = tmp_path / "preds_fast.jsonl"
        save_predictions(path, records)
        load_predictions(path, store, [seq])
        for i in range(10):
            assert len(store.get("s", i, "fast", FULLTRAIN)) == 1

    def test_missing_entry_is_an_error_not_empty(self):
        store = PredictionStore(self.detectors())
        store.add("s", 0, "fast", FULLTRAIN, make_detections())
        with pytest.raises(MissingPredictionError):
            store.get("s", 1, "fast", FULLTRAIN)
        with pytest.raises(MissingPredictionError):
            store.get("s", 0, "slow", FULLTRAIN)

    def test_variants_coexist_and_round_trip(self, tmp_path):
        seq = make_sequence("s", 1)
        full = make_detections(0.9)
        hold = DetectionSet(())
        records = [
            PredictionRecord("s", 0, "fast", FULLTRAIN, full),
            PredictionRecord("s", 0, "fast", HOLDOUT, hold),
        ]
        path1 = tmp_path / "a.jsonl"
        path2 = tmp_path / "b.jsonl"
        save_predictions(path1, records)
        store = PredictionStore(self.detectors())
        load_predictions(path1, store, [seq])
        assert store.get("s", 0, "fast", FULLTRAIN) == full
        assert store.get("s", 0, "fast", HOLDOUT) == hold
        reloaded = [
            PredictionRecord("s", 0, "fast", FULLTRAIN, store.get("s", 0, "fast", FULLTRAIN)),
            PredictionRecord("s", 0, "fast", HOLDOUT, store.get("s", 0, "fast", HOLDOUT)),
        ]
        save_predictions(path2, reloaded)
        assert path1.read_bytes() == path2.read_bytes()

    def test_unknown_sequence_rejected(self, tmp_path):
        seq = make_sequence("s", 2)
        path = tmp_path / "preds.jsonl"
        save_predictions(path, [PredictionRecord("other", 0, "fast", FULLTRAIN, make_detections())])
        store = PredictionStore(self.detectors())
        with pytest.raises(DatasetError, match="unknown sequence"):
            load_predictions(path, store, [seq])

    def test_frame_out_of_range_rejected(self, tmp_path):
        seq = make_sequence("s", 2)
        path = tmp_path / "preds.jsonl"
        save_predictions(path, [PredictionRecord("s", 5, "fast", FULLTRAIN, make_detections())])
        store = PredictionStore(self.detectors())
        with pytest.raises(DatasetError, match="outside sequence"):
            load_predictions(path, store, [seq])

    def test_repeated_gets_return_identical_sets(self):
        store = PredictionStore(self.detectors())
        dets = make_detections()
        store.add("s", 0, "fast", FULLTRAIN, dets)
        assert store.get("s", 0, "fast", FULLTRAIN) is store.get("s", 0, "fast", FULLTRAIN)

    def test_validate_complete(self):
        seq = make_sequence("s", 2)
        store = PredictionStore(self.detectors())
        store.add("s", 0, "fast", FULLTRAIN, make_detections())
        store.add("s", 1, "fast", HOLDOUT, make_detections())
        store.add("s", 0, "slow", FULLTRAIN, make_detections())
        with pytest.raises(DatasetError, match="slow"):
            store.validate_complete([seq])
        store.add("s", 1, "slow", FULLTRAIN, make_detections())
        store.validate_complete([seq])


class TestFolds:
    def test_select_variant(self):
        manifest = FoldManifest(5, {"a": 0, "b": 2})
        assert select_variant(manifest, "a", "train") == HOLDOUT
        assert select_variant(manifest, "b", "train") == HOLDOUT
        assert select_variant(manifest, "zzz", "test") == FULLTRAIN

    def test_train_sequence_must_be_assigned(self):
        manifest = FoldManifest(5, {"a": 0})
        with pytest.raises(DatasetError):
            select_variant(manifest, "missing", "train")

    def test_fold_indices_validated(self):
        with pytest.raises(DatasetError):
            FoldManifest(5, {"a": 5})

    def test_five_folds_cover_all_training_sequences(self):
        assignment = {f"seq-{i}": i % 5 for i in range(20)}
        manifest = FoldManifest(5, assignment)
        assert manifest.train_sequence_ids == tuple(sorted(assignment))
        assert set(assignment.values()) == set(range(5))
