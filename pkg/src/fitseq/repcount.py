"""Per-exercise repetition counting from joint-angle trajectories.

Each exercise tracks one joint angle through a two-threshold hysteresis
band. The stage can only change when the angle enters the "up" or "down"
region; angles inside the band never move the stage, which suppresses
jitter. One repetition is counted exactly when a full cycle closes, i.e.
on re-entering the exercise's resting stage after having visited the
opposite stage.

The built-in thresholds are pragmatic defaults and can be overridden per
exercise through a key-value config file.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .errors import UnknownExercise
from .features import Source, _as_text_reader, _as_text_writer, _finish_text
from .geometry import joint_angle
from .landmarks import LandmarkFrame, LandmarkId

logger = logging.getLogger(__name__)

# Frames a side choice stays pinned before re-evaluating, to avoid flapping.
SIDE_STICKY_FRAMES = 30

_LEFT_IDS = tuple(lm for lm in LandmarkId if lm.name.startswith("LEFT_"))
_RIGHT_IDS = tuple(lm for lm in LandmarkId if lm.name.startswith("RIGHT_"))


@dataclass(frozen=True)
class RepSpec:
    exercise: str
    joints: tuple[str, str, str]    # side-neutral; vertex in the middle
    enter_down: float               # degrees; crossing enters the "down" stage
    enter_up: float                 # degrees; crossing enters the "up" stage
    count_on: str                   # stage whose re-entry closes a cycle

    def __post_init__(self):
        if self.enter_down == self.enter_up:
            raise ValueError("thresholds must leave a non-empty hysteresis band")
        if self.count_on not in ("up", "down"):
            raise ValueError(f"count_on must be 'up' or 'down', got {self.count_on!r}")

    @property
    def up_is_low(self) -> bool:
        # e.g. a curl's "up" (flexed) is the low-angle side of the band
        return self.enter_up < self.enter_down

    def region(self, angle: float) -> Optional[str]:
        if self.up_is_low:
            if angle <= self.enter_up:
                return "up"
            if angle >= self.enter_down:
                return "down"
        else:
            if angle >= self.enter_up:
                return "up"
            if angle <= self.enter_down:
                return "down"
        return None

    def angle_ids(self, side: str) -> tuple[LandmarkId, LandmarkId, LandmarkId]:
        return tuple(LandmarkId[f"{side}_{j}"] for j in self.joints)  # type: ignore[return-value]


DEFAULT_SPECS = {
    "barbell_biceps_curl": RepSpec(
        "barbell_biceps_curl", ("SHOULDER", "ELBOW", "WRIST"),
        enter_down=160.0, enter_up=60.0, count_on="down",
    ),
    "squat": RepSpec(
        "squat", ("HIP", "KNEE", "ANKLE"),
        enter_down=100.0, enter_up=160.0, count_on="up",
    ),
    "push_up": RepSpec(
        "push_up", ("SHOULDER", "ELBOW", "WRIST"),
        enter_down=95.0, enter_up=150.0, count_on="up",
    ),
    "shoulder_press": RepSpec(
        "shoulder_press", ("SHOULDER", "ELBOW", "WRIST"),
        enter_down=90.0, enter_up=150.0, count_on="down",
    ),
}


def default_spec(exercise: str, overrides: Optional[dict] = None) -> RepSpec:
    """Built-in spec for a canonical exercise, with optional threshold overrides."""
    try:
        spec = DEFAULT_SPECS[exercise]
    except KeyError:
        raise UnknownExercise(f"no repetition spec for {exercise!r}") from None
    if overrides and exercise in overrides:
        fields = {
            k: float(v) for k, v in overrides[exercise].items()
            if k in ("enter_down", "enter_up")
        }
        spec = replace(spec, **fields)
    return spec


@dataclass(frozen=True)
class RepCounterState:
    stage: str = "unknown"          # "unknown" | "up" | "down"
    count: int = 0
    last_angle: float = 0.0
    frames_in_stage: int = 0
    armed: bool = False             # opposite stage visited since last rest


@dataclass(frozen=True)
class RepEvent:
    count: int
    angle: float
    frame_index: int = -1


def step(
    state: RepCounterState, spec: RepSpec, angle: float
) -> tuple[RepCounterState, Optional[RepEvent]]:
    """Advance the hysteresis machine by one angle sample.

    Out-of-range angles are clamped into [0, 180] (and logged). An event
    fires only on the transition that closes a full cycle.
    """
    if not 0.0 <= angle <= 180.0:
        logger.warning("angle %.2f outside [0, 180], clamping", angle)
        angle = min(180.0, max(0.0, angle))
    region = spec.region(angle)
    if region is None or region == state.stage:
        frames = state.frames_in_stage + 1 if region == state.stage else state.frames_in_stage
        return replace(state, last_angle=angle, frames_in_stage=frames), None

    armed = state.armed
    count = state.count
    event = None
    if region == spec.count_on:
        if armed:
            count += 1
            event = RepEvent(count=count, angle=angle)
        armed = False
    else:
        # reached the opposite stage: the next return to rest closes a cycle
        armed = True
    new_state = RepCounterState(
        stage=region, count=count, last_angle=angle, frames_in_stage=0, armed=armed
    )
    return new_state, event


class RepSession:
    """Feeds landmark frames to one exercise's counter.

    Resolves which body side to track (the side with more present
    landmarks, pinned for SIDE_STICKY_FRAMES to avoid flapping) and skips
    frames where the tracked side's angle cannot be computed.
    """

    def __init__(self, exercise: str, spec: Optional[RepSpec] = None):
        self.spec = spec or default_spec(exercise)
        self.state = RepCounterState()
        self.events: list[RepEvent] = []
        self._side = "LEFT"
        self._side_age = SIDE_STICKY_FRAMES     # force evaluation on first frame

    def _update_side(self, frame: LandmarkFrame) -> None:
        if self._side_age < SIDE_STICKY_FRAMES:
            self._side_age += 1
            return
        left = int(frame.present[list(map(int, _LEFT_IDS))].sum())
        right = int(frame.present[list(map(int, _RIGHT_IDS))].sum())
        side = "RIGHT" if right > left else "LEFT"
        if side != self._side:
            self._side = side
        self._side_age = 0

    def feed(self, frame: LandmarkFrame, frame_index: int = -1) -> Optional[RepEvent]:
        self._update_side(frame)
        ids = self.spec.angle_ids(self._side)
        if not all(frame.is_present(i) for i in ids):
            return None
        angle = joint_angle(*(frame.point(i) for i in ids))
        self.state, event = step(self.state, self.spec, angle)
        if event is not None:
            event = replace(event, frame_index=frame_index)
            self.events.append(event)
        return event

    @property
    def count(self) -> int:
        return self.state.count


def count_session(
    frames: Iterable[LandmarkFrame],
    exercise: str,
    spec: Optional[RepSpec] = None,
) -> tuple[int, list[RepEvent]]:
    """Fold the counter over a single video's frames."""
    session = RepSession(exercise, spec)
    for idx, frame in enumerate(frames):
        session.feed(frame, idx)
    return session.count, session.events


# --- event log / threshold config I/O ---------------------------------------------

EVENT_LOG_HEADER = ("frame_index", "exercise", "count_after_event", "angle_at_event")


def write_event_log(events: Sequence[RepEvent], exercise: str, sink: Source) -> None:
    stream, owns = _as_text_writer(sink)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(EVENT_LOG_HEADER)
        for e in events:
            writer.writerow((e.frame_index, exercise, e.count, f"{e.angle:.6f}"))
        stream.flush()
    finally:
        _finish_text(stream, owns)


def load_threshold_overrides(source: Source) -> dict[str, dict[str, float]]:
    """Parse ``exercise.threshold = value`` lines; '#' starts a comment."""
    stream, owns = _as_text_reader(source)
    overrides: dict[str, dict[str, float]] = {}
    try:
        for line_no, raw in enumerate(stream, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line or "." not in line.split("=", 1)[0]:
                raise ValueError(f"line {line_no}: expected 'exercise.threshold = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            exercise, threshold = key.split(".", 1)
            overrides.setdefault(exercise, {})[threshold] = float(value)
    finally:
        _finish_text(stream, owns)
    return overrides
