"""Simulated real-time loop: buffer frames, classify each full window,
route angles to the predicted exercise's repetition counter.

The cadence is non-overlapping: the buffer fills to the model's window
length (30 frames by default), one classification is emitted, and the
buffer clears - one prediction per second at 30 fps. Once a prediction
exists, every usable frame's tracked angle feeds the counter of the
currently predicted exercise; switching predictions resets the incoming
exercise's counter stage so half-finished cycles never carry across.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NoModelLoaded
from .features import FeatureFrame, featurize
from .landmarks import LandmarkFrame, frame_is_usable
from .model import SequenceModel
from .repcount import DEFAULT_SPECS, RepSession


@dataclass(frozen=True)
class StreamEvent:
    kind: str                   # "classified" | "rep" | "skipped_frame"
    frame_index: int
    label: str = ""
    confidence: float = 0.0
    count: int = 0
    reason: str = ""

    def to_record(self) -> dict:
        rec = {"kind": self.kind, "frame_index": self.frame_index}
        if self.kind == "classified":
            rec.update(label=self.label, confidence=self.confidence)
        elif self.kind == "rep":
            rec.update(exercise=self.label, count=self.count)
        else:
            rec.update(reason=self.reason)
        return rec


@dataclass(eq=False)
class StreamSession:
    model: Optional[SequenceModel] = None
    buffer: list[FeatureFrame] = field(default_factory=list)
    current_label: str = ""
    current_confidence: float = 0.0
    counters: dict[str, RepSession] = field(default_factory=dict)
    frames_seen: int = 0
    sliding: bool = False       # experimental: classify every frame once full

    @property
    def window_len(self) -> int:
        if self.model is None:
            raise NoModelLoaded("attach a model before streaming")
        return self.model.feature_config.window_len

    def _counter_for(self, label: str) -> Optional[RepSession]:
        if label not in DEFAULT_SPECS:
            return None
        if label not in self.counters:
            self.counters[label] = RepSession(label)
        return self.counters[label]


def stream_step(session: StreamSession, frame: LandmarkFrame) -> list[StreamEvent]:
    """Advance the session by one frame; returns the events it produced."""
    if session.model is None:
        raise NoModelLoaded("attach a model before streaming")
    index = session.frames_seen
    session.frames_seen += 1
    events: list[StreamEvent] = []

    if not frame_is_usable(frame):
        return [StreamEvent("skipped_frame", index, reason="no fully valid side")]

    session.buffer.append(featurize(frame, session.model.feature_config))
    if len(session.buffer) >= session.window_len:
        window = np.stack([f.values for f in session.buffer[-session.window_len:]])
        probs = session.model.predict_proba(
            session.model.scaler.transform(window)[None]
        )[0]
        label = session.model.labels.label(int(probs.argmax()))
        confidence = float(probs.max())
        if label != session.current_label and label in DEFAULT_SPECS:
            # conservative: a fresh prediction starts from an unknown stage
            session.counters[label] = RepSession(label)
        session.current_label = label
        session.current_confidence = confidence
        events.append(StreamEvent("classified", index, label=label, confidence=confidence))
        if session.sliding:
            del session.buffer[0]
        else:
            session.buffer.clear()

    if session.current_label:
        counter = session._counter_for(session.current_label)
        if counter is not None:
            rep = counter.feed(frame, index)
            if rep is not None:
                events.append(
                    StreamEvent("rep", index, label=session.current_label, count=rep.count)
                )
    return events
