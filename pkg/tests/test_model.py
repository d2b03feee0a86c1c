"""Core type validation and the distribution flooring contract."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackfuse.errors import DegenerateSum, InvalidValue, WrongLength
from trackfuse.model import (
    PROB_FLOOR,
    BoundingBox,
    ClassDistribution,
    Detection,
    LabelSet,
    Track,
    TrackEntry,
    TrackStatus,
    validate_distribution,
)


class TestLabelSet:
    def test_index_lookup(self):
        labels = LabelSet(["wolf", "lynx", "fox"])
        assert len(labels) == 3
        assert labels.index("lynx") == 1
        assert labels[2] == "fox"
        assert list(labels) == ["wolf", "lynx", "fox"]

    def test_rejects_empty_and_duplicates(self):
        with pytest.raises(InvalidValue):
            LabelSet([])
        with pytest.raises(InvalidValue):
            LabelSet(["a", "a"])

    def test_unknown_name(self):
        with pytest.raises(InvalidValue):
            LabelSet(["a", "b"]).index("c")


class TestBoundingBox:
    def test_properties(self):
        b = BoundingBox(2.0, 3.0, 6.0, 11.0)
        assert b.width == 4.0
        assert b.height == 8.0
        assert b.area == 32.0
        assert b.center == (4.0, 7.0)

    @pytest.mark.parametrize("corners", [
        (0, 0, 0, 1), (0, 0, 1, 0), (1, 0, 0, 1), (0, 0, float("nan"), 1),
        (0, 0, float("inf"), 1),
    ])
    def test_rejects_degenerate(self, corners):
        with pytest.raises(InvalidValue):
            BoundingBox(*corners)


class TestValidateDistribution:
    def test_already_normalized_passes_through(self):
        d = validate_distribution([0.5, 0.5], 2)
        assert np.array_equal(d.probs, [0.5, 0.5])

    def test_zero_entry_is_floored(self):
        d = validate_distribution([1.0, 0.0], 2)
        assert d.probs[0] == pytest.approx(1.0, abs=1e-11)
        assert 0.0 < d.probs[1] <= 2 * PROB_FLOOR
        assert d.argmax == 0

    def test_unnormalized_input_is_scaled(self):
        # 2/8 and 6/8 are exact in binary, so equality is exact.
        d = validate_distribution([2.0, 6.0], 2)
        assert np.array_equal(d.probs, [0.25, 0.75])

    def test_wrong_length(self):
        with pytest.raises(WrongLength):
            validate_distribution([0.5, 0.5], 3)

    @pytest.mark.parametrize("raw", [[-0.1, 1.1], [float("nan"), 1.0], [float("inf"), 1.0]])
    def test_invalid_entries(self, raw):
        with pytest.raises(InvalidValue):
            validate_distribution(raw, 2)

    def test_degenerate_sum(self):
        with pytest.raises(DegenerateSum):
            validate_distribution([0.0, 0.0], 2)
        with pytest.raises(DegenerateSum):
            validate_distribution([1e-10, 1e-10], 2)

    @given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=1, max_size=40))
    @settings(max_examples=200)
    def test_output_is_on_floored_simplex(self, raw):
        arr = np.asarray(raw)
        if arr.sum() < 1e-9:
            return
        d = validate_distribution(arr, len(raw))
        assert abs(float(d.probs.sum()) - 1.0) <= 1e-12
        assert np.all(d.probs > 0.0)

    @given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=1, max_size=40))
    @settings(max_examples=200)
    def test_idempotent_exactly(self, raw):
        arr = np.asarray(raw)
        if arr.sum() < 1e-9:
            return
        once = validate_distribution(arr, len(raw))
        twice = validate_distribution(once.probs, len(raw))
        assert np.array_equal(once.probs, twice.probs)

    @given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=2, max_size=40))
    @settings(max_examples=200)
    def test_argmax_preserved(self, raw):
        arr = np.asarray(raw)
        if arr.sum() < 1e-9 or arr.max() <= PROB_FLOOR:
            return
        assert validate_distribution(arr, len(raw)).argmax == int(np.argmax(arr))


class TestClassDistribution:
    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidValue):
            ClassDistribution(np.array([0.5, 0.4]))

    def test_rejects_zero_entries(self):
        with pytest.raises(InvalidValue):
            ClassDistribution(np.array([1.0, 0.0]))

    def test_is_readonly(self):
        d = validate_distribution([0.3, 0.7], 2)
        with pytest.raises(ValueError):
            d.probs[0] = 0.9

    def test_argmax_tie_breaks_low(self):
        d = validate_distribution([0.5, 0.5], 2)
        assert d.argmax == 0


class TestDetection:
    def _dist(self):
        return validate_distribution([0.6, 0.4], 2)

    def test_basic(self):
        det = Detection(3, BoundingBox(0, 0, 5, 5), 0.9, self._dist(),
                        embedding=[1.0, 0.0], gt_class=1, gt_track=4)
        assert det.frame_id == 3
        assert det.embedding.flags.writeable is False

    @pytest.mark.parametrize("score", [-0.1, 1.5, float("nan")])
    def test_rejects_bad_score(self, score):
        with pytest.raises(InvalidValue):
            Detection(0, BoundingBox(0, 0, 1, 1), score, self._dist())

    def test_rejects_negative_frame(self):
        with pytest.raises(InvalidValue):
            Detection(-1, BoundingBox(0, 0, 1, 1), 0.5, self._dist())


class TestTrack:
    def _entries(self):
        d1 = validate_distribution([0.6, 0.4], 2)
        d2 = validate_distribution([0.3, 0.7], 2)
        return (
            TrackEntry(0, BoundingBox(0, 0, 2, 2), d1),
            TrackEntry(1, BoundingBox(1, 0, 3, 2), d2),
        )

    def test_cum_log_invariant_holds(self):
        entries = self._entries()
        cum = entries[0].dist.log() + entries[1].dist.log()
        t = Track(1, entries, cum, TrackStatus.CONFIRMED, 2, 0)
        assert t.frame_ids == (0, 1)
        assert len(t) == 2

    def test_cum_log_mismatch_rejected(self):
        entries = self._entries()
        with pytest.raises(InvalidValue):
            Track(1, entries, np.array([0.0, 0.0]), TrackStatus.CONFIRMED, 2, 0)

    def test_frames_must_increase(self):
        d = validate_distribution([0.6, 0.4], 2)
        entries = (TrackEntry(1, BoundingBox(0, 0, 2, 2), d),
                   TrackEntry(1, BoundingBox(0, 0, 2, 2), d))
        with pytest.raises(InvalidValue):
            Track(1, entries, 2 * d.log(), TrackStatus.CONFIRMED, 2, 0)

    def test_id_must_be_positive(self):
        with pytest.raises(InvalidValue):
            Track(0, (), np.zeros(2), TrackStatus.TENTATIVE, 0, 0)
