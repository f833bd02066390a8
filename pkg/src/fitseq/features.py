"""Per-frame feature vectors, 30-frame windows, scaling, and label encoding.

Three frame layouts are supported:

* ``mixed78`` - the 66 raw coordinates of the 22 tracked landmarks followed
  by 12 joint angles (the default training layout).
* ``invariant20`` - 8 joint angles plus 12 torso-normalized distances; no
  raw coordinates at all.
* ``raw99`` - the 33 raw triples of the full pose topology, read from the
  extended 101-column CSV.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyTrainingSet,
    LayoutMismatch,
    MalformedHeader,
    NonNumericCell,
    SinkFailure,
    UnknownLabel,
)
from .geometry import joint_angle, normalized_distance, torso_scale
from .landmarks import (
    LandmarkFrame,
    LandmarkId,
    N_LANDMARKS,
    Source,
    _as_text_reader,
    _as_text_writer,
    _finish_text,
    frame_is_usable,
)

logger = logging.getLogger(__name__)

L = LandmarkId

# (a, vertex, c): interior angle measured at the middle landmark.
ANGLE_TRIPLES = (
    (L.LEFT_HIP, L.LEFT_SHOULDER, L.LEFT_ELBOW),
    (L.RIGHT_HIP, L.RIGHT_SHOULDER, L.RIGHT_ELBOW),
    (L.LEFT_SHOULDER, L.LEFT_ELBOW, L.LEFT_WRIST),
    (L.RIGHT_SHOULDER, L.RIGHT_ELBOW, L.RIGHT_WRIST),
    (L.LEFT_HIP, L.LEFT_KNEE, L.LEFT_ANKLE),
    (L.RIGHT_HIP, L.RIGHT_KNEE, L.RIGHT_ANKLE),
    (L.LEFT_SHOULDER, L.LEFT_HIP, L.LEFT_KNEE),
    (L.RIGHT_SHOULDER, L.RIGHT_HIP, L.RIGHT_KNEE),
    (L.LEFT_KNEE, L.LEFT_ANKLE, L.LEFT_HEEL),
    (L.RIGHT_KNEE, L.RIGHT_ANKLE, L.RIGHT_HEEL),
    (L.LEFT_ANKLE, L.LEFT_HEEL, L.LEFT_FOOT_INDEX),
    (L.RIGHT_ANKLE, L.RIGHT_HEEL, L.RIGHT_FOOT_INDEX),
)

# Angle subset used by the invariant layout.
INVARIANT_ANGLE_TRIPLES = (
    (L.LEFT_SHOULDER, L.LEFT_ELBOW, L.LEFT_WRIST),
    (L.RIGHT_SHOULDER, L.RIGHT_ELBOW, L.RIGHT_WRIST),
    (L.LEFT_HIP, L.LEFT_KNEE, L.LEFT_ANKLE),
    (L.RIGHT_HIP, L.RIGHT_KNEE, L.RIGHT_ANKLE),
    (L.LEFT_SHOULDER, L.LEFT_HIP, L.LEFT_KNEE),
    (L.RIGHT_SHOULDER, L.RIGHT_HIP, L.RIGHT_KNEE),
    (L.LEFT_HIP, L.LEFT_SHOULDER, L.LEFT_ELBOW),
    (L.RIGHT_HIP, L.RIGHT_SHOULDER, L.RIGHT_ELBOW),
)

# Landmark pairs whose distances (torso-normalized) complete the layout.
INVARIANT_DISTANCE_PAIRS = (
    (L.LEFT_SHOULDER, L.RIGHT_SHOULDER),
    (L.LEFT_HIP, L.RIGHT_HIP),
    (L.LEFT_HIP, L.LEFT_KNEE),
    (L.RIGHT_HIP, L.RIGHT_KNEE),
    (L.LEFT_SHOULDER, L.LEFT_HIP),
    (L.RIGHT_SHOULDER, L.RIGHT_HIP),
    (L.LEFT_ELBOW, L.LEFT_KNEE),
    (L.RIGHT_ELBOW, L.RIGHT_KNEE),
    (L.LEFT_WRIST, L.LEFT_SHOULDER),
    (L.RIGHT_WRIST, L.RIGHT_SHOULDER),
    (L.LEFT_WRIST, L.LEFT_HIP),
    (L.RIGHT_WRIST, L.RIGHT_HIP),
)

# Full 33-point pose topology, for the raw layout's extended CSV.
POSE33_NAMES = (
    "NOSE", "LEFT_EYE_INNER", "LEFT_EYE", "LEFT_EYE_OUTER", "RIGHT_EYE_INNER",
    "RIGHT_EYE", "RIGHT_EYE_OUTER", "LEFT_EAR", "RIGHT_EAR", "MOUTH_LEFT",
    "MOUTH_RIGHT", "LEFT_SHOULDER", "RIGHT_SHOULDER", "LEFT_ELBOW",
    "RIGHT_ELBOW", "LEFT_WRIST", "RIGHT_WRIST", "LEFT_PINKY", "RIGHT_PINKY",
    "LEFT_INDEX", "RIGHT_INDEX", "LEFT_THUMB", "RIGHT_THUMB", "LEFT_HIP",
    "RIGHT_HIP", "LEFT_KNEE", "RIGHT_KNEE", "LEFT_ANKLE", "RIGHT_ANKLE",
    "LEFT_HEEL", "RIGHT_HEEL", "LEFT_FOOT_INDEX", "RIGHT_FOOT_INDEX",
)

LAYOUT_DIMS = {"mixed78": 78, "raw99": 99, "invariant20": 20}

DEFAULT_WINDOW_LEN = 30


@dataclass(frozen=True)
class FeatureConfig:
    layout: str = "mixed78"
    window_len: int = DEFAULT_WINDOW_LEN
    angle_unit: str = "degrees"

    def __post_init__(self):
        if self.layout not in LAYOUT_DIMS:
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.window_len < 1:
            raise ValueError("window_len must be positive")
        if self.angle_unit != "degrees":
            raise ValueError("only degree angles are supported")

    @property
    def feature_dim(self) -> int:
        return LAYOUT_DIMS[self.layout]


@dataclass(eq=False)
class FeatureFrame:
    values: np.ndarray = field(repr=False)
    source_video: str = ""
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __eq__(self, other):
        if not isinstance(other, FeatureFrame):
            return NotImplemented
        return (
            self.source_video == other.source_video
            and self.label == other.label
            and np.array_equal(self.values, other.values)
        )


@dataclass(eq=False)
class WindowSample:
    matrix: np.ndarray = field(repr=False)   # (window_len, feature_dim)
    label: str = ""
    source_video: str = ""
    start_frame: int = 0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)


def feature_column_names(layout: str) -> tuple[str, ...]:
    if layout == "mixed78":
        coords = tuple(f"{lm.name}_{ax}" for lm in LandmarkId for ax in "xyz")
        return coords + tuple(f"angle_{i}" for i in range(len(ANGLE_TRIPLES)))
    if layout == "invariant20":
        return tuple(f"angle_{i}" for i in range(len(INVARIANT_ANGLE_TRIPLES))) + tuple(
            f"dist_{i}" for i in range(len(INVARIANT_DISTANCE_PAIRS))
        )
    if layout == "raw99":
        return tuple(f"{name}_{ax}" for name in POSE33_NAMES for ax in "xyz")
    raise ValueError(f"unknown layout {layout!r}")


def _angle_or_zero(frame: LandmarkFrame, triple) -> float:
    a, vertex, c = triple
    if not (frame.is_present(a) and frame.is_present(vertex) and frame.is_present(c)):
        return 0.0
    return joint_angle(frame.point(a), frame.point(vertex), frame.point(c))


def featurize(frame: LandmarkFrame, config: FeatureConfig) -> FeatureFrame:
    """Compute one frame's feature vector for the configured layout.

    Features whose constituent landmarks are absent come out as 0. The raw
    layout cannot be produced from a 22-point frame (it needs the extended
    33-point rows) and raises ``LayoutMismatch``.
    """
    if config.layout == "mixed78":
        values = np.empty(78, dtype=np.float64)
        values[: 3 * N_LANDMARKS] = frame.points.ravel()
        for i, triple in enumerate(ANGLE_TRIPLES):
            values[3 * N_LANDMARKS + i] = _angle_or_zero(frame, triple)
    elif config.layout == "invariant20":
        scale = torso_scale(frame)
        if scale <= 1e-9:
            logger.warning("degenerate torso scale in video %r; normalizing by 1.0", frame.video_id)
            scale = 1.0
        values = np.empty(20, dtype=np.float64)
        for i, triple in enumerate(INVARIANT_ANGLE_TRIPLES):
            values[i] = _angle_or_zero(frame, triple)
        for i, (p, q) in enumerate(INVARIANT_DISTANCE_PAIRS):
            if frame.is_present(p) and frame.is_present(q):
                values[8 + i] = normalized_distance(frame.point(p), frame.point(q), scale)
            else:
                values[8 + i] = 0.0
    else:
        raise LayoutMismatch(
            "raw99 features come from the extended 33-landmark CSV, "
            "not from 22-point landmark frames"
        )
    return FeatureFrame(values, frame.video_id, frame.label)


def featurize_frames(
    frames: Iterable[LandmarkFrame], config: FeatureConfig
) -> list[FeatureFrame]:
    """Featurize a frame stream, skipping frames with no fully valid side."""
    out = []
    skipped = 0
    for frame in frames:
        if not frame_is_usable(frame):
            skipped += 1
            continue
        out.append(featurize(frame, config))
    if skipped:
        logger.info("skipped %d unusable frames", skipped)
    return out


def window(
    frames: Sequence[FeatureFrame], window_len: int, stride: int
) -> list[WindowSample]:
    """Cut consecutive same-video frames into fixed-length windows.

    Windows never span two videos; each is labeled with its first frame's
    label; a trailing remainder shorter than ``window_len`` is dropped.
    """
    if window_len < 1 or stride < 1:
        raise ValueError("window_len and stride must be positive")
    samples: list[WindowSample] = []
    run_start = 0
    n = len(frames)
    for i in range(n + 1):
        if i < n and frames[i].source_video == frames[run_start].source_video:
            continue
        run = frames[run_start:i]
        for s in range(0, len(run) - window_len + 1, stride):
            block = np.stack([f.values for f in run[s : s + window_len]])
            samples.append(
                WindowSample(block, run[s].label, run[s].source_video, run_start + s)
            )
        run_start = i
    return samples


# --- standardization ---------------------------------------------------------

STD_FLOOR = 1e-8


@dataclass(eq=False)
class StandardScaler:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse_transform(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) * self.std + self.mean

    @classmethod
    def fit(cls, rows: np.ndarray) -> "StandardScaler":
        rows = np.asarray(rows, dtype=np.float64)
        if rows.size == 0:
            raise EmptyTrainingSet("cannot fit a scaler on no rows")
        mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        return cls(mean, np.maximum(std, STD_FLOOR))


def fit_scaler(train: Sequence[WindowSample]) -> StandardScaler:
    """Fit per-feature statistics over all frames of all training windows."""
    if not train:
        raise EmptyTrainingSet("cannot fit a scaler on an empty training set")
    rows = np.concatenate([s.matrix for s in train], axis=0)
    return StandardScaler.fit(rows)


def apply_scaler(scaler: StandardScaler, sample: WindowSample) -> WindowSample:
    return WindowSample(
        scaler.transform(sample.matrix), sample.label, sample.source_video, sample.start_frame
    )


# --- label encoding ----------------------------------------------------------

@dataclass(frozen=True)
class LabelTable:
    classes: tuple[str, ...]

    def index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise UnknownLabel(f"label {label!r} not in table {self.classes}") from None

    def label(self, index: int) -> str:
        return self.classes[index]

    def __len__(self) -> int:
        return len(self.classes)


def encode_labels(labels: Iterable[str]) -> LabelTable:
    """Alphabetically ordered label table over the distinct labels seen."""
    classes = tuple(sorted(set(labels)))
    if not classes:
        raise EmptyTrainingSet("no labels to encode")
    return LabelTable(classes)


def one_hot(table: LabelTable, label: str) -> np.ndarray:
    vec = np.zeros(len(table), dtype=np.float64)
    vec[table.index(label)] = 1.0
    return vec


# --- feature CSV I/O ----------------------------------------------------------

def write_feature_csv(
    frames: Iterable[FeatureFrame], sink: Source, layout: str = "mixed78"
) -> int:
    """Write feature frames as ``video_id,label`` + layout columns."""
    names = feature_column_names(layout)
    stream, owns = _as_text_writer(sink)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(("video_id", "label") + names)
        count = 0
        for frame in frames:
            if frame.values.shape != (len(names),):
                raise LayoutMismatch(
                    f"frame has {frame.values.shape[0]} values, layout {layout!r} "
                    f"needs {len(names)}"
                )
            row = [frame.source_video, frame.label]
            row.extend(f"{v:.6f}" for v in frame.values)
            writer.writerow(row)
            count += 1
        stream.flush()
        return count
    except OSError as exc:
        raise SinkFailure(str(exc)) from exc
    finally:
        _finish_text(stream, owns)


def read_feature_csv(source: Source, layout: str = "mixed78") -> list[FeatureFrame]:
    names = feature_column_names(layout)
    expected = ("video_id", "label") + names
    stream, owns = _as_text_reader(source)
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeader("empty input, expected a header row")
        if tuple(header) != expected:
            raise MalformedHeader(
                f"feature CSV header does not match layout {layout!r} "
                f"({len(header)} columns, expected {len(expected)})"
            )
        frames = []
        for row_idx, row in enumerate(reader, start=1):
            if len(row) != len(expected):
                raise MalformedHeader(
                    f"row {row_idx} has {len(row)} cells, expected {len(expected)}"
                )
            values = np.empty(len(names), dtype=np.float64)
            for col_idx, cell in enumerate(row[2:]):
                try:
                    values[col_idx] = float(cell)
                except ValueError:
                    raise NonNumericCell(row_idx, expected[col_idx + 2], cell) from None
            frames.append(FeatureFrame(values, row[0], row[1]))
        return frames
    finally:
        _finish_text(stream, owns)


def read_raw33_csv(source: Source) -> list[FeatureFrame]:
    """Read the extended 101-column CSV as raw99 feature frames."""
    return read_feature_csv(source, layout="raw99")


# --- window tensor container ---------------------------------------------------

def save_window_tensor(path, windows: Sequence[WindowSample], table: LabelTable) -> None:
    """Serialize windows as a self-describing (N, window_len, dim) container."""
    if not windows:
        raise EmptyTrainingSet("no windows to save")
    x = np.stack([w.matrix for w in windows])
    y = np.array([table.index(w.label) for w in windows], dtype=np.int64)
    videos = np.array([w.source_video for w in windows])
    starts = np.array([w.start_frame for w in windows], dtype=np.int64)
    np.savez(
        path,
        x=x,
        y=y,
        videos=videos,
        starts=starts,
        classes=np.array(table.classes),
    )


def load_window_tensor(path) -> tuple[list[WindowSample], LabelTable]:
    with np.load(path, allow_pickle=False) as data:
        table = LabelTable(tuple(str(c) for c in data["classes"]))
        windows = [
            WindowSample(
                data["x"][i],
                table.label(int(data["y"][i])),
                str(data["videos"][i]),
                int(data["starts"][i]),
            )
            for i in range(data["x"].shape[0])
        ]
    return windows, table
