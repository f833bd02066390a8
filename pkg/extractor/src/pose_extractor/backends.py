"""Pose-estimation backends.

A backend turns one BGR video frame into a (33, 4) array of
(x, y, z, visibility) rows, or None when no person is found. Two
implementations ship:

* ``mediapipe`` - the real detector (optional dependency).
* ``sidecar`` - replays landmarks from a JSON file next to the video
  (``<video>.landmarks.json``); deterministic, used for fixtures and for
  re-running extractions without the detector.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Protocol

import numpy as np


class BackendUnavailable(Exception):
    """The requested pose backend cannot run in this environment."""


class PoseBackend(Protocol):
    def detect(self, frame_bgr: np.ndarray, frame_index: int) -> Optional[np.ndarray]:
        """(33, 4) rows of x, y, z, visibility; None if no person."""

    def close(self) -> None: ...


class MediaPipeBackend:
    """BlazePose via mediapipe's Pose solution."""

    def __init__(self, model_complexity: int = 1):
        try:
            import mediapipe as mp
        except ImportError as exc:
            raise BackendUnavailable(
                "mediapipe is not installed; install the 'mediapipe' extra "
                "or use --backend sidecar"
            ) from exc
        self._mp = mp
        self._pose = mp.solutions.pose.Pose(
            static_image_mode=False, model_complexity=model_complexity
        )

    def detect(self, frame_bgr: np.ndarray, frame_index: int) -> Optional[np.ndarray]:
        import cv2

        result = self._pose.process(cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB))
        if not result.pose_landmarks:
            return None
        out = np.empty((33, 4))
        for i, lm in enumerate(result.pose_landmarks.landmark):
            out[i] = (lm.x, lm.y, lm.z, lm.visibility)
        return out

    def close(self) -> None:
        self._pose.close()


class SidecarBackend:
    """Replays landmarks recorded in ``<video>.landmarks.json``.

    Sidecar format: {"frames": [frame, ...]} where each frame is either
    null (no person) or a list of 33 [x, y, z, visibility] rows.
    """

    def __init__(self, video_path):
        sidecar = Path(str(video_path) + ".landmarks.json")
        if not sidecar.exists():
            raise BackendUnavailable(f"no landmark sidecar at {sidecar}")
        data = json.loads(sidecar.read_text(encoding="utf-8"))
        self._frames = data["frames"]

    def detect(self, frame_bgr: np.ndarray, frame_index: int) -> Optional[np.ndarray]:
        if frame_index >= len(self._frames):
            return None
        entry = self._frames[frame_index]
        if entry is None:
            return None
        arr = np.asarray(entry, dtype=np.float64)
        if arr.shape != (33, 4):
            raise ValueError(f"sidecar frame {frame_index} has shape {arr.shape}")
        return arr

    def close(self) -> None:
        pass


def make_backend(name: str, video_path) -> PoseBackend:
    if name == "mediapipe":
        return MediaPipeBackend()
    if name == "sidecar":
        return SidecarBackend(video_path)
    raise BackendUnavailable(f"unknown backend {name!r}")
