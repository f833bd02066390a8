import numpy as np
import pytest

from clip_fixtures import name_index, synthetic_pose, write_clip, write_sidecar
from pose_extractor.schema import POSE33_NAMES


@pytest.fixture(scope="session")
def full_visibility_clip(tmp_path_factory):
    """Every frame has a fully visible person."""
    path = tmp_path_factory.mktemp("clips") / "full.avi"
    n = 40
    write_clip(path, n)
    rng = np.random.default_rng(1)
    write_sidecar(path, [synthetic_pose(i, rng) for i in range(n)])
    return path, n


@pytest.fixture(scope="session")
def mixed_visibility_clip(tmp_path_factory):
    """10 clean frames, 3 person-absent, 4 right-side-low, 3 both-sides-broken."""
    path = tmp_path_factory.mktemp("clips") / "mixed.avi"
    frames = []
    rng = np.random.default_rng(2)
    for i in range(10):
        frames.append(synthetic_pose(i, rng))
    for _ in range(3):
        frames.append(None)
    for i in range(4):
        pose = synthetic_pose(i, rng)
        for name in POSE33_NAMES:
            if name.startswith("RIGHT_"):
                pose[name_index(name), 3] = 0.2
        frames.append(pose)
    for i in range(3):
        pose = synthetic_pose(i, rng)
        pose[name_index("LEFT_WRIST"), 3] = 0.1
        pose[name_index("RIGHT_ANKLE"), 3] = 0.1
        frames.append(pose)
    write_clip(path, len(frames))
    write_sidecar(path, frames)
    return path, frames
