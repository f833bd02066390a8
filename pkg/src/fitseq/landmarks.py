"""Pose-landmark frames and their CSV schema.

A frame is the 22 tracked body points of one video frame, in normalized
image coordinates, plus per-point presence flags. Points the pose backend
could not detect are stored as the exact placeholder triple (0, 0, 0), so
presence is always recoverable from the coordinates alone.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import MalformedHeader, NonNumericCell, SinkFailure

logger = logging.getLogger(__name__)

PLACEHOLDER = (0.0, 0.0, 0.0)

# Joints tracked on both sides, in schema order (left of a pair first).
_TRACKED_JOINTS = (
    "SHOULDER", "ELBOW", "WRIST", "HIP", "KNEE",
    "ANKLE", "HEEL", "FOOT_INDEX", "PINKY", "INDEX", "THUMB",
)


class LandmarkId(IntEnum):
    """The 22 tracked landmarks; ordinal order is the serialization order."""

    LEFT_SHOULDER = 0
    RIGHT_SHOULDER = 1
    LEFT_ELBOW = 2
    RIGHT_ELBOW = 3
    LEFT_WRIST = 4
    RIGHT_WRIST = 5
    LEFT_HIP = 6
    RIGHT_HIP = 7
    LEFT_KNEE = 8
    RIGHT_KNEE = 9
    LEFT_ANKLE = 10
    RIGHT_ANKLE = 11
    LEFT_HEEL = 12
    RIGHT_HEEL = 13
    LEFT_FOOT_INDEX = 14
    RIGHT_FOOT_INDEX = 15
    LEFT_PINKY = 16
    RIGHT_PINKY = 17
    LEFT_INDEX = 18
    RIGHT_INDEX = 19
    LEFT_THUMB = 20
    RIGHT_THUMB = 21


N_LANDMARKS = len(LandmarkId)

# Exercise classes shipped with the package; the label field itself is an
# open string so new classes can flow through untouched.
CANONICAL_LABELS = ("barbell_biceps_curl", "push_up", "shoulder_press", "squat")

# A side is considered valid when all six of these joints are present on it.
ESSENTIAL_JOINTS = ("SHOULDER", "ELBOW", "WRIST", "HIP", "KNEE", "ANKLE")

LEFT_ESSENTIALS = tuple(LandmarkId[f"LEFT_{j}"] for j in ESSENTIAL_JOINTS)
RIGHT_ESSENTIALS = tuple(LandmarkId[f"RIGHT_{j}"] for j in ESSENTIAL_JOINTS)

RAW_CSV_HEADER = ("video_id", "label") + tuple(
    f"{lm.name}_{axis}" for lm in LandmarkId for axis in ("x", "y", "z")
)


@dataclass(eq=False)
class LandmarkFrame:
    """One video frame's tracked points plus provenance."""

    video_id: str
    label: str
    points: np.ndarray = field(repr=False)       # (22, 3) float64
    present: np.ndarray = field(repr=False)      # (22,) bool

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.present = np.asarray(self.present, dtype=bool)
        if self.points.shape != (N_LANDMARKS, 3):
            raise ValueError(f"points must be ({N_LANDMARKS}, 3), got {self.points.shape}")
        if self.present.shape != (N_LANDMARKS,):
            raise ValueError(f"present must be ({N_LANDMARKS},), got {self.present.shape}")
        is_placeholder = np.all(self.points == 0.0, axis=1)
        if not np.array_equal(~self.present, is_placeholder):
            raise ValueError("present flags inconsistent with placeholder points")

    @classmethod
    def from_points(cls, video_id: str, label: str, points) -> "LandmarkFrame":
        """Build a frame deriving presence from the placeholder convention."""
        pts = np.asarray(points, dtype=np.float64)
        present = ~np.all(pts == 0.0, axis=1)
        return cls(video_id, label, pts, present)

    def point(self, lm: LandmarkId) -> np.ndarray:
        return self.points[int(lm)]

    def is_present(self, lm: LandmarkId) -> bool:
        return bool(self.present[int(lm)])

    def __eq__(self, other):
        if not isinstance(other, LandmarkFrame):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.label == other.label
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.present, other.present)
        )


def frame_is_usable(
    frame: LandmarkFrame,
    exercise_hint: Optional[str] = None,
    overrides: Optional[Mapping[str, Sequence[str]]] = None,
) -> bool:
    """True when one full side of essential joints is present.

    ``overrides`` may map an exercise label to its own joint-name list; by
    default every exercise uses the common six-joint set. The hint is
    accepted but changes nothing unless an override entry exists for it.
    """
    joints = ESSENTIAL_JOINTS
    if overrides and exercise_hint is not None and exercise_hint in overrides:
        joints = tuple(overrides[exercise_hint])
    left = all(frame.present[LandmarkId[f"LEFT_{j}"]] for j in joints)
    right = all(frame.present[LandmarkId[f"RIGHT_{j}"]] for j in joints)
    return left or right


# --- CSV I/O ----------------------------------------------------------------

Source = Union[str, Path, IO[bytes], IO[str]]


def _as_text_reader(source: Source):
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def _as_text_writer(sink: Source):
    if isinstance(sink, (str, Path)):
        return open(sink, "w", encoding="utf-8", newline=""), True
    if isinstance(sink, io.TextIOBase):
        return sink, False
    return io.TextIOWrapper(sink, encoding="utf-8", newline="\n"), False


def _finish_text(stream, owns: bool) -> None:
    """Close owned streams; detach wrappers so callers' buffers stay open."""
    if owns:
        stream.close()
    elif isinstance(stream, io.TextIOWrapper):
        if stream.writable():
            stream.flush()
        stream.detach()


_warned_labels: set[str] = set()


def frame_from_row(row: Sequence[str], row_index: int = 0) -> LandmarkFrame:
    """Build a frame from one raw CSV data row (68 cells)."""
    if len(row) != len(RAW_CSV_HEADER):
        raise MalformedHeader(
            f"row {row_index} has {len(row)} cells, expected {len(RAW_CSV_HEADER)}"
        )
    video_id, label = row[0], row[1]
    if label not in CANONICAL_LABELS and label not in _warned_labels:
        logger.warning("unknown exercise label %r (row %d), passing through", label, row_index)
        _warned_labels.add(label)
    values = np.empty(3 * N_LANDMARKS, dtype=np.float64)
    for col_idx, cell in enumerate(row[2:]):
        try:
            values[col_idx] = float(cell)
        except ValueError:
            raise NonNumericCell(row_index, RAW_CSV_HEADER[col_idx + 2], cell) from None
    return LandmarkFrame.from_points(video_id, label, values.reshape(N_LANDMARKS, 3))


def parse_landmark_csv(source: Source) -> list[LandmarkFrame]:
    """Parse the 68-column raw landmark CSV into frames, in file order.

    Presence flags are derived from the placeholder convention. Unknown
    labels are warned about and passed through unchanged.
    """
    stream, owns = _as_text_reader(source)
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeader("empty input, expected a header row")
        if tuple(header) != RAW_CSV_HEADER:
            raise MalformedHeader(
                f"expected {len(RAW_CSV_HEADER)} columns starting "
                f"{RAW_CSV_HEADER[:4]}, got {len(header)} starting {tuple(header[:4])}"
            )
        return [frame_from_row(row, idx) for idx, row in enumerate(reader, start=1)]
    finally:
        _finish_text(stream, owns)


def write_landmark_csv(frames: Iterable[LandmarkFrame], sink: Source) -> int:
    """Write frames as the 68-column CSV with 6-decimal fixed formatting.

    Returns the number of data rows written.
    """
    stream, owns = _as_text_writer(sink)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(RAW_CSV_HEADER)
        count = 0
        for frame in frames:
            row = [frame.video_id, frame.label]
            row.extend(f"{v:.6f}" for v in frame.points.ravel())
            writer.writerow(row)
            count += 1
        stream.flush()
        return count
    except OSError as exc:
        raise SinkFailure(str(exc)) from exc
    finally:
        _finish_text(stream, owns)
