"""`extract` command: one exercise video -> raw landmark CSV."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .backends import BackendUnavailable, make_backend
from .extract import ExtractionJob, UnreadableVideo, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Convert an exercise video into the raw pose-landmark CSV.",
    )
    parser.add_argument("--video", required=True, help="input video path")
    parser.add_argument("--label", required=True, help="exercise label for every row")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--video-id", default="", help="defaults to the video filename stem")
    parser.add_argument("--min-visibility", type=float, default=0.5,
                        help="landmarks below this confidence become placeholders")
    parser.add_argument("--fps", type=float, default=None,
                        help="decimate the video to roughly this frame rate")
    parser.add_argument("--all-landmarks", action="store_true",
                        help="also write the 33-point CSV next to the output")
    parser.add_argument("--backend", choices=("mediapipe", "sidecar"),
                        default="mediapipe")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    job = ExtractionJob(
        video=Path(args.video),
        label=args.label,
        out=Path(args.out),
        video_id=args.video_id,
        min_visibility=args.min_visibility,
        target_fps=args.fps,
        all_landmarks=args.all_landmarks,
    )
    try:
        backend = make_backend(args.backend, args.video)
        summary = extract(job, backend)
    except BackendUnavailable as exc:
        print(f"error: backend: {exc}", file=sys.stderr)
        return 4
    except (UnreadableVideo, FileNotFoundError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return 3
    print(f"{job.video} -> {job.out}: {summary}")
    if summary.raw33_path is not None:
        print(f"33-landmark variant -> {summary.raw33_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
