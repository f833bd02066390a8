"""3-D joint geometry: interior angles and normalized point distances."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateScale
from .landmarks import LandmarkFrame, LandmarkId

# Vectors shorter than this are treated as degenerate (angle undefined).
_NORM_FLOOR = 1e-9


def joint_angle(a, vertex, c) -> float:
    """Interior angle at ``vertex`` between rays to ``a`` and ``c``, in degrees.

    Returns a value in [0, 180]; degenerate rays (near-zero length) give 0.
    """
    a = np.asarray(a, dtype=np.float64)
    vertex = np.asarray(vertex, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    u = a - vertex
    v = c - vertex
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu < _NORM_FLOOR or nv < _NORM_FLOOR:
        return 0.0
    cos = float(u @ v) / (nu * nv)
    cos = max(-1.0, min(1.0, cos))
    return math.degrees(math.acos(cos))


def normalized_distance(p, q, scale: float) -> float:
    """Euclidean distance between ``p`` and ``q`` divided by ``scale``."""
    if scale <= _NORM_FLOOR:
        raise DegenerateScale(f"scale {scale!r} too small to normalize by")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    d = p - q
    return math.sqrt(float(d @ d)) / scale


def torso_scale(frame: LandmarkFrame) -> float:
    """Mean of the left and right shoulder-to-hip distances.

    Camera-distance- and subject-height-invariant normalizer for distance
    features. Sides whose shoulder or hip is absent contribute nothing; with
    no valid side the scale is 0 (callers fall back to 1.0).
    """
    total = 0.0
    n = 0
    for shoulder, hip in (
        (LandmarkId.LEFT_SHOULDER, LandmarkId.LEFT_HIP),
        (LandmarkId.RIGHT_SHOULDER, LandmarkId.RIGHT_HIP),
    ):
        if frame.is_present(shoulder) and frame.is_present(hip):
            d = frame.point(shoulder) - frame.point(hip)
            total += math.sqrt(float(d @ d))
            n += 1
    return total / n if n else 0.0
