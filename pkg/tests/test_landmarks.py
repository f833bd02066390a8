import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frame_fixtures import frame_with_missing, full_frame
from fitseq.errors import MalformedHeader, NonNumericCell
from fitseq.landmarks import (
    ESSENTIAL_JOINTS,
    LEFT_ESSENTIALS,
    RIGHT_ESSENTIALS,
    LandmarkFrame,
    LandmarkId,
    N_LANDMARKS,
    RAW_CSV_HEADER,
    frame_is_usable,
    parse_landmark_csv,
    write_landmark_csv,
)


def make_csv(rows):
    out = io.StringIO()
    out.write(",".join(RAW_CSV_HEADER) + "\n")
    for row in rows:
        out.write(",".join(row) + "\n")
    return io.BytesIO(out.getvalue().encode())


def zeros_row(video_id="v0", label="squat"):
    return [video_id, label] + ["0.000000"] * (3 * N_LANDMARKS)


class TestSchema:
    def test_header_has_68_columns(self):
        assert len(RAW_CSV_HEADER) == 68

    def test_column_order_matches_landmark_ordinals(self):
        for lm in LandmarkId:
            base = 2 + 3 * int(lm)
            assert RAW_CSV_HEADER[base] == f"{lm.name}_x"
            assert RAW_CSV_HEADER[base + 1] == f"{lm.name}_y"
            assert RAW_CSV_HEADER[base + 2] == f"{lm.name}_z"

    def test_exactly_22_landmarks(self):
        assert N_LANDMARKS == 22
        names = {lm.name for lm in LandmarkId}
        for joint in ("SHOULDER", "ELBOW", "WRIST", "HIP", "KNEE", "ANKLE",
                      "HEEL", "FOOT_INDEX", "PINKY", "INDEX", "THUMB"):
            assert f"LEFT_{joint}" in names and f"RIGHT_{joint}" in names


class TestParse:
    def test_all_placeholder_row(self):
        frames = parse_landmark_csv(make_csv([zeros_row()]))
        assert len(frames) == 1
        assert not frames[0].present.any()
        assert frames[0].video_id == "v0"
        assert frames[0].label == "squat"

    def test_single_point_present(self):
        row = zeros_row()
        row[2:5] = ["0.500000", "0.400000", "-0.100000"]
        frames = parse_landmark_csv(make_csv([row]))
        assert frames[0].present[int(LandmarkId.LEFT_SHOULDER)]
        assert frames[0].present.sum() == 1
        np.testing.assert_array_equal(
            frames[0].point(LandmarkId.LEFT_SHOULDER), [0.5, 0.4, -0.1]
        )

    def test_malformed_header(self):
        bad = io.BytesIO(b"video,label\n")
        with pytest.raises(MalformedHeader):
            parse_landmark_csv(bad)

    def test_non_numeric_cell_reports_row_and_column(self):
        row = zeros_row()
        row[5] = "oops"
        with pytest.raises(NonNumericCell) as exc:
            parse_landmark_csv(make_csv([zeros_row(), row]))
        assert exc.value.row == 2
        assert exc.value.column == "RIGHT_SHOULDER_x"

    def test_unknown_label_warned_and_passed_through(self, caplog):
        row = zeros_row(label="handstand")
        with caplog.at_level("WARNING"):
            frames = parse_landmark_csv(make_csv([row]))
        assert frames[0].label == "handstand"
        assert any("handstand" in r.message for r in caplog.records)


class TestWrite:
    def test_empty_sequence_writes_header_only(self):
        sink = io.BytesIO()
        assert write_landmark_csv([], sink) == 0
        text = sink.getvalue().decode()
        assert text == ",".join(RAW_CSV_HEADER) + "\n"

    def test_three_frames_four_lines(self):
        sink = io.BytesIO()
        frames = [full_frame(seed=s) for s in range(3)]
        assert write_landmark_csv(frames, sink) == 3
        assert sink.getvalue().decode().count("\n") == 4

    def test_write_parse_write_byte_identical(self, tmp_path):
        # 10-row fixture at 6 decimal places survives a full round trip
        rng = np.random.default_rng(7)
        frames = []
        for i in range(10):
            pts = np.round(rng.uniform(-1, 1, size=(N_LANDMARKS, 3)), 6)
            pts[rng.integers(0, N_LANDMARKS, 4)] = 0.0
            frames.append(LandmarkFrame.from_points(f"vid{i % 3}", "push_up", pts))
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_landmark_csv(frames, first)
        write_landmark_csv(parse_landmark_csv(first), second)
        assert first.read_bytes() == second.read_bytes()


@st.composite
def frames_6dp(draw):
    n = draw(st.integers(min_value=0, max_value=6))
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    frames = []
    for i in range(n):
        pts = np.round(rng.uniform(-2, 2, size=(N_LANDMARKS, 3)), 6)
        for lm in range(N_LANDMARKS):
            if rng.random() < 0.2:
                pts[lm] = 0.0
        frames.append(LandmarkFrame.from_points(f"v{i % 2}", "squat", pts))
    return frames


@given(frames_6dp())
@settings(max_examples=30, deadline=None)
def test_parse_write_round_trip(frames):
    sink = io.BytesIO()
    write_landmark_csv(frames, sink)
    parsed = parse_landmark_csv(io.BytesIO(sink.getvalue()))
    assert parsed == frames


def brute_force_usable(present_by_joint):
    """Reference predicate straight from the definition: all six essentials
    present on the left, or all six on the right."""
    left = all(present_by_joint[("LEFT", j)] for j in ESSENTIAL_JOINTS)
    right = all(present_by_joint[("RIGHT", j)] for j in ESSENTIAL_JOINTS)
    return left or right


class TestUsability:
    def test_all_present(self):
        assert frame_is_usable(full_frame())

    def test_one_full_side_suffices(self):
        frame = frame_with_missing(RIGHT_ESSENTIALS)
        assert frame_is_usable(frame)

    def test_cross_side_misses_fail_both_sides(self):
        frame = frame_with_missing([LandmarkId.LEFT_WRIST, LandmarkId.RIGHT_ANKLE])
        assert not frame_is_usable(frame)

    def test_exhaustive_4096_patterns_match_brute_force(self):
        essentials = list(LEFT_ESSENTIALS) + list(RIGHT_ESSENTIALS)
        for bits in itertools.product([True, False], repeat=12):
            missing = [lm for lm, keep in zip(essentials, bits) if not keep]
            frame = frame_with_missing(missing)
            by_joint = {}
            for side, ids in (("LEFT", LEFT_ESSENTIALS), ("RIGHT", RIGHT_ESSENTIALS)):
                for joint, lm in zip(ESSENTIAL_JOINTS, ids):
                    by_joint[(side, joint)] = lm not in missing
            assert frame_is_usable(frame) == brute_force_usable(by_joint)

    def test_override_table_changes_requirement(self):
        frame = frame_with_missing(
            [LandmarkId.LEFT_ANKLE, LandmarkId.RIGHT_ANKLE]
        )
        assert not frame_is_usable(frame)
        overrides = {"push_up": ("SHOULDER", "ELBOW", "WRIST")}
        assert frame_is_usable(frame, exercise_hint="push_up", overrides=overrides)
        # hint without an override entry falls back to the common set
        assert not frame_is_usable(frame, exercise_hint="squat", overrides=overrides)


def test_present_iff_not_placeholder_invariant():
    frame = frame_with_missing([LandmarkId.LEFT_THUMB])
    placeholder = np.all(frame.points == 0.0, axis=1)
    np.testing.assert_array_equal(~frame.present, placeholder)


def test_inconsistent_flags_rejected():
    pts = np.zeros((N_LANDMARKS, 3))
    present = np.ones(N_LANDMARKS, dtype=bool)
    with pytest.raises(ValueError):
        LandmarkFrame("v", "squat", pts, present)
