"""The raw landmark CSV wire format.

This mirrors the classifier pipeline's input contract: 22 tracked landmarks
in a fixed joint-major order, one `video_id,label` prefix, x/y/z columns
per landmark, 6-decimal fixed formatting, and the exact placeholder triple
(0, 0, 0) for landmarks the backend did not detect. The contract tests
parse our output with the consumer's parser to keep both sides honest.
"""

from __future__ import annotations

import csv
from typing import IO, Sequence

import numpy as np

# Full 33-point pose topology in backend output order.
POSE33_NAMES = (
    "NOSE", "LEFT_EYE_INNER", "LEFT_EYE", "LEFT_EYE_OUTER", "RIGHT_EYE_INNER",
    "RIGHT_EYE", "RIGHT_EYE_OUTER", "LEFT_EAR", "RIGHT_EAR", "MOUTH_LEFT",
    "MOUTH_RIGHT", "LEFT_SHOULDER", "RIGHT_SHOULDER", "LEFT_ELBOW",
    "RIGHT_ELBOW", "LEFT_WRIST", "RIGHT_WRIST", "LEFT_PINKY", "RIGHT_PINKY",
    "LEFT_INDEX", "RIGHT_INDEX", "LEFT_THUMB", "RIGHT_THUMB", "LEFT_HIP",
    "RIGHT_HIP", "LEFT_KNEE", "RIGHT_KNEE", "LEFT_ANKLE", "RIGHT_ANKLE",
    "LEFT_HEEL", "RIGHT_HEEL", "LEFT_FOOT_INDEX", "RIGHT_FOOT_INDEX",
)

# The 22 tracked landmarks, in the CSV column order the classifier expects.
TRACKED_NAMES = tuple(
    f"{side}_{joint}"
    for joint in ("SHOULDER", "ELBOW", "WRIST", "HIP", "KNEE", "ANKLE",
                  "HEEL", "FOOT_INDEX", "PINKY", "INDEX", "THUMB")
    for side in ("LEFT", "RIGHT")
)

# Indices of the tracked landmarks inside the 33-point topology.
TRACKED_POSE33_INDICES = tuple(POSE33_NAMES.index(name) for name in TRACKED_NAMES)

RAW_CSV_HEADER = ("video_id", "label") + tuple(
    f"{name}_{axis}" for name in TRACKED_NAMES for axis in ("x", "y", "z")
)

RAW33_CSV_HEADER = ("video_id", "label") + tuple(
    f"{name}_{axis}" for name in POSE33_NAMES for axis in ("x", "y", "z")
)

# One full side of these joints must be detected for a frame to be usable.
ESSENTIAL_JOINTS = ("SHOULDER", "ELBOW", "WRIST", "HIP", "KNEE", "ANKLE")

_LEFT_ESSENTIAL_COLS = tuple(
    TRACKED_NAMES.index(f"LEFT_{j}") for j in ESSENTIAL_JOINTS
)
_RIGHT_ESSENTIAL_COLS = tuple(
    TRACKED_NAMES.index(f"RIGHT_{j}") for j in ESSENTIAL_JOINTS
)


def select_tracked(points33: np.ndarray) -> np.ndarray:
    """(33, 3) backend points -> (22, 3) tracked subset in CSV order."""
    return points33[list(TRACKED_POSE33_INDICES)]


def side_valid(present22: Sequence[bool]) -> bool:
    """True when all six essentials are present on the left or right side."""
    left = all(present22[i] for i in _LEFT_ESSENTIAL_COLS)
    right = all(present22[i] for i in _RIGHT_ESSENTIAL_COLS)
    return left or right


class CsvWriter:
    """Streams rows in the raw landmark format (22- or 33-point layout)."""

    def __init__(self, stream: IO[str], video_id: str, label: str,
                 all_landmarks: bool = False):
        self._writer = csv.writer(stream, lineterminator="\n")
        self._video_id = video_id
        self._label = label
        self._n_points = 33 if all_landmarks else 22
        self._writer.writerow(RAW33_CSV_HEADER if all_landmarks else RAW_CSV_HEADER)
        self.rows = 0

    def write_frame(self, points: np.ndarray) -> None:
        if points.shape != (self._n_points, 3):
            raise ValueError(f"expected ({self._n_points}, 3) points, got {points.shape}")
        row = [self._video_id, self._label]
        row.extend(f"{v:.6f}" for v in points.ravel())
        self._writer.writerow(row)
        self.rows += 1
