"""Video -> raw landmark CSV conversion."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .backends import PoseBackend
from .schema import TRACKED_POSE33_INDICES, CsvWriter, select_tracked, side_valid

logger = logging.getLogger(__name__)


class UnreadableVideo(Exception):
    """The input video cannot be opened or decoded."""


@dataclass(frozen=True)
class ExtractionJob:
    video: Path
    label: str
    out: Path
    video_id: str = ""              # defaults to the video filename stem
    min_visibility: float = 0.5
    target_fps: Optional[float] = None
    all_landmarks: bool = False     # also write the 33-point CSV

    def resolved_video_id(self) -> str:
        return self.video_id or Path(self.video).stem


@dataclass
class ExtractionSummary:
    frames_total: int = 0
    frames_usable: int = 0
    frames_skipped: int = 0
    out_path: Path = None
    raw33_path: Optional[Path] = None

    def __str__(self):
        return (
            f"{self.frames_total} frames decoded, {self.frames_usable} usable, "
            f"{self.frames_skipped} skipped"
        )


def raw33_path_for(out: Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".raw33" + out.suffix)


def extract(job: ExtractionJob, backend: PoseBackend) -> ExtractionSummary:
    """Run pose estimation over every (possibly fps-decimated) frame.

    Landmarks under the visibility threshold become the placeholder triple;
    frames without one fully detected side are skipped entirely. Rows come
    out in frame order with a constant video id.
    """
    import cv2

    video_path = str(job.video)
    capture = cv2.VideoCapture(video_path)
    if not capture.isOpened():
        raise UnreadableVideo(f"cannot open {video_path}")

    stride = 1
    if job.target_fps:
        src_fps = capture.get(cv2.CAP_PROP_FPS) or 0.0
        if src_fps > 0:
            stride = max(1, round(src_fps / job.target_fps))
            logger.info("decimating %gfps source by %d to ~%gfps", src_fps, stride, job.target_fps)

    summary = ExtractionSummary(out_path=Path(job.out))
    video_id = job.resolved_video_id()
    out_stream = open(job.out, "w", encoding="utf-8", newline="")
    writer = CsvWriter(out_stream, video_id, job.label)
    raw33_stream = None
    raw33_writer = None
    if job.all_landmarks:
        summary.raw33_path = raw33_path_for(job.out)
        raw33_stream = open(summary.raw33_path, "w", encoding="utf-8", newline="")
        raw33_writer = CsvWriter(raw33_stream, video_id, job.label, all_landmarks=True)

    try:
        decoded = -1
        while True:
            ok, frame = capture.read()
            if not ok:
                break
            decoded += 1
            if decoded % stride:
                continue
            summary.frames_total += 1
            try:
                detection = backend.detect(frame, decoded)
            except Exception:
                logger.exception("detection failed on frame %d, skipping", decoded)
                summary.frames_skipped += 1
                continue
            if detection is None:
                summary.frames_skipped += 1
                continue

            present33 = detection[:, 3] >= job.min_visibility
            points33 = np.where(present33[:, None], detection[:, :3], 0.0)
            points22 = select_tracked(points33)
            present22 = present33[list(TRACKED_POSE33_INDICES)]
            if not side_valid(present22):
                summary.frames_skipped += 1
                continue
            summary.frames_usable += 1
            writer.write_frame(points22)
            if raw33_writer is not None:
                raw33_writer.write_frame(points33)
    finally:
        capture.release()
        backend.close()
        out_stream.close()
        if raw33_stream is not None:
            raw33_stream.close()
    return summary
