"""Synthetic exercise sessions as periodic landmark trajectories.

Builds a jointed stick body in an upright frame, drives one joint angle per
exercise through cosine cycles with exercise-specific kinematics (knee for
squats, elbow for the arm exercises, plus distinct arm elevation and body
pitch), then applies per-video viewpoint/scale/subject jitter and per-frame
coordinate noise. The scripted tracked angle is exact by construction
before noise, so a generated session with N cycles crosses the default
repetition thresholds exactly N times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .landmarks import CANONICAL_LABELS, LandmarkFrame, LandmarkId

L = LandmarkId


@dataclass(frozen=True)
class BodyShape:
    torso: float = 0.26
    shoulder_w: float = 0.20
    hip_w: float = 0.13
    upper_arm: float = 0.13
    forearm: float = 0.12
    thigh: float = 0.17
    shin: float = 0.16


# (rest, far) tracked-joint angles and static pose parameters per exercise.
# The tracked angle sweeps rest -> far -> rest each cycle.
KINEMATICS = {
    "squat": dict(knee=(172.0, 85.0), elbow=(168.0, 168.0), elevation=8.0, pitch=3.0),
    "barbell_biceps_curl": dict(knee=(173.0, 173.0), elbow=(170.0, 40.0), elevation=6.0, pitch=0.0),
    "push_up": dict(knee=(176.0, 176.0), elbow=(162.0, 88.0), elevation=78.0, pitch=82.0),
    "shoulder_press": dict(knee=(174.0, 174.0), elbow=(72.0, 168.0), elevation=150.0, pitch=0.0),
}


def _rot_x(points: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate (...,3) points about the x axis; +90 deg sends +y to +z."""
    a = math.radians(degrees)
    c, s = math.cos(a), math.sin(a)
    out = points.copy()
    out[..., 1] = c * points[..., 1] - s * points[..., 2]
    out[..., 2] = s * points[..., 1] + c * points[..., 2]
    return out


def _rot_y(points: np.ndarray, degrees: float) -> np.ndarray:
    a = math.radians(degrees)
    c, s = math.cos(a), math.sin(a)
    out = points.copy()
    out[..., 0] = c * points[..., 0] + s * points[..., 2]
    out[..., 2] = -s * points[..., 0] + c * points[..., 2]
    return out


def _pose_points(
    shape: BodyShape, knee_angle: float, elbow_angle: float, elevation: float
) -> np.ndarray:
    """Upright body-frame skeleton with the given interior joint angles."""
    down = np.array([0.0, -1.0, 0.0])
    pts = np.zeros((len(LandmarkId), 3))
    shoulder_c = np.array([0.0, shape.torso, 0.0])

    for side_sign, side in ((1.0, "LEFT"), (-1.0, "RIGHT")):
        lat = np.array([side_sign, 0.0, 0.0])
        hip = lat * shape.hip_w / 2
        shoulder = shoulder_c + lat * shape.shoulder_w / 2

        # legs: thigh tilts forward by half the flexion so the ankle stays
        # under the hip; the shin closes the interior knee angle
        gamma = (180.0 - knee_angle) / 2.0
        d_thigh = _rot_x(down, -gamma)
        knee = hip + shape.thigh * d_thigh
        d_shin = _rot_x(d_thigh, 180.0 - knee_angle)
        ankle = knee + shape.shin * d_shin
        heel = ankle + np.array([0.0, -0.02, -0.045])
        foot = ankle + np.array([0.0, -0.025, 0.085])

        # arms: upper arm raised forward by `elevation` from hanging; the
        # forearm closes the interior elbow angle
        d_ua = _rot_x(down, -elevation)
        elbow = shoulder + shape.upper_arm * d_ua
        d_fa = _rot_x(d_ua, -(180.0 - elbow_angle))
        wrist = elbow + shape.forearm * d_fa
        pinky = wrist + 0.032 * d_fa + 0.012 * lat
        index = wrist + 0.036 * d_fa
        thumb = wrist + 0.022 * d_fa - 0.012 * lat

        pts[L[f"{side}_SHOULDER"]] = shoulder
        pts[L[f"{side}_ELBOW"]] = elbow
        pts[L[f"{side}_WRIST"]] = wrist
        pts[L[f"{side}_HIP"]] = hip
        pts[L[f"{side}_KNEE"]] = knee
        pts[L[f"{side}_ANKLE"]] = ankle
        pts[L[f"{side}_HEEL"]] = heel
        pts[L[f"{side}_FOOT_INDEX"]] = foot
        pts[L[f"{side}_PINKY"]] = pinky
        pts[L[f"{side}_INDEX"]] = index
        pts[L[f"{side}_THUMB"]] = thumb
    return pts


def make_session(
    exercise: str,
    n_frames: int,
    n_cycles: int,
    seed: int = 0,
    noise_std: float = 0.004,
    jitter: bool = True,
    video_id: str | None = None,
) -> list[LandmarkFrame]:
    """One video's landmark frames with exactly ``n_cycles`` full cycles.

    The phase starts and ends at the resting pose, so the tracked joint
    re-enters its resting threshold region once per cycle.
    """
    if exercise not in KINEMATICS:
        raise ValueError(f"no synthetic kinematics for {exercise!r}")
    if n_frames < 2:
        raise ValueError("need at least 2 frames")
    rng = np.random.default_rng(seed)
    kin = KINEMATICS[exercise]
    video_id = video_id or f"synth_{exercise}_{seed}"

    shape = BodyShape()
    if jitter:
        scale_j = rng.uniform(0.93, 1.07, size=7)
        shape = BodyShape(*(getattr(shape, f.name) * s
                            for f, s in zip(BodyShape.__dataclass_fields__.values(), scale_j)))
    yaw = rng.uniform(-20.0, 20.0) if jitter else 0.0
    scale = rng.uniform(0.9, 1.1) if jitter else 1.0
    offset = np.array([0.5, 0.12, 0.0])
    if jitter:
        offset = offset + rng.uniform([-0.04, -0.03, -0.05], [0.04, 0.03, 0.05])

    knee_rest, knee_far = kin["knee"]
    elbow_rest, elbow_far = kin["elbow"]

    frames = []
    for t in range(n_frames):
        phase = 2.0 * math.pi * n_cycles * t / (n_frames - 1)
        c = (1.0 - math.cos(phase)) / 2.0
        knee = knee_rest + (knee_far - knee_rest) * c
        elbow = elbow_rest + (elbow_far - elbow_rest) * c
        pts = _pose_points(shape, knee, elbow, kin["elevation"])
        pts = _rot_x(pts, kin["pitch"])
        # anchor the feet, center the body in frame
        pts[:, 1] -= (pts[L.LEFT_ANKLE, 1] + pts[L.RIGHT_ANKLE, 1]) / 2.0
        if yaw:
            pts = _rot_y(pts, yaw)
        pts = pts * scale + offset
        if noise_std > 0:
            pts = pts + rng.normal(0.0, noise_std, pts.shape)
        frames.append(LandmarkFrame.from_points(video_id, exercise, pts))
    return frames


def make_dataset(
    windows_per_class: int,
    window_len: int = 30,
    windows_per_video: int = 10,
    seed: int = 0,
    noise_std: float = 0.004,
) -> list[LandmarkFrame]:
    """Landmark frames for all four classes, sized for exact window counts.

    Every generated frame is usable, so cutting each video into
    non-overlapping ``window_len`` windows yields ``windows_per_class``
    windows for every class.
    """
    frames: list[LandmarkFrame] = []
    for class_idx, exercise in enumerate(CANONICAL_LABELS):
        remaining = windows_per_class
        video = 0
        while remaining > 0:
            in_video = min(windows_per_video, remaining)
            rng = np.random.default_rng([seed, class_idx, video])
            n_frames = in_video * window_len
            n_cycles = int(rng.integers(3, 7))
            frames.extend(
                make_session(
                    exercise,
                    n_frames,
                    n_cycles,
                    seed=int(rng.integers(0, 2**31)),
                    noise_std=noise_std,
                    video_id=f"synth_{exercise}_{video:03d}",
                )
            )
            remaining -= in_video
            video += 1
    return frames
