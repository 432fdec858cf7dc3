"""BlazePose landmark topology and the per-frame landmark container."""

from dataclasses import dataclass

import numpy as np

N_LANDMARKS = 33

# BlazePose indices (the subset this package addresses by name).
NOSE = 0
LEFT_SHOULDER = 11
RIGHT_SHOULDER = 12
LEFT_ELBOW = 13
RIGHT_ELBOW = 14
LEFT_WRIST = 15
RIGHT_WRIST = 16
LEFT_HIP = 23
RIGHT_HIP = 24
LEFT_KNEE = 25
RIGHT_KNEE = 26
LEFT_ANKLE = 27
RIGHT_ANKLE = 28
LEFT_HEEL = 29
RIGHT_HEEL = 30
LEFT_FOOT_INDEX = 31
RIGHT_FOOT_INDEX = 32

JOINT_NAMES = ("elbow", "shoulder", "hip", "knee", "ankle")

# Angle triplets (a, b, c): interior angle at b between rays b->a and b->c.
# The ankle uses FOOT_INDEX (not HEEL) as its distal landmark; pass a custom
# table to five_joint_angles/assemble_features to switch.
JOINT_TRIPLETS = {
    "LEFT": {
        "elbow": (LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST),
        "shoulder": (LEFT_ELBOW, LEFT_SHOULDER, LEFT_HIP),
        "hip": (LEFT_SHOULDER, LEFT_HIP, LEFT_KNEE),
        "knee": (LEFT_HIP, LEFT_KNEE, LEFT_ANKLE),
        "ankle": (LEFT_KNEE, LEFT_ANKLE, LEFT_FOOT_INDEX),
    },
    "RIGHT": {
        "elbow": (RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST),
        "shoulder": (RIGHT_ELBOW, RIGHT_SHOULDER, RIGHT_HIP),
        "hip": (RIGHT_SHOULDER, RIGHT_HIP, RIGHT_KNEE),
        "knee": (RIGHT_HIP, RIGHT_KNEE, RIGHT_ANKLE),
        "ankle": (RIGHT_KNEE, RIGHT_ANKLE, RIGHT_FOOT_INDEX),
    },
}

DEFAULT_MIN_VISIBILITY = 0.3


def as_landmark_array(landmarks) -> np.ndarray:
    """Coerce to a float64 (33, 4) array of [x, y, z, visibility] rows."""
    arr = np.asarray(landmarks, dtype=np.float64)
    if arr.shape != (N_LANDMARKS, 4):
        raise ValueError(f"expected (33, 4) landmark array, got {arr.shape}")
    return arr


@dataclass(slots=True)
class LandmarkFrame:
    """One frame's 33 body landmarks.

    `landmarks` is a (33, 4) array of [x, y, z, visibility]; coordinates are
    dimensionless normalized values, visibility lies in [0, 1].
    `timestamp_ms` is -1 when the source carries no timestamps.
    """

    frame_index: int
    landmarks: np.ndarray
    timestamp_ms: float = -1.0

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        self.landmarks = as_landmark_array(self.landmarks)
        vis = self.landmarks[:, 3]
        if np.any(vis < 0.0) or np.any(vis > 1.0):
            raise ValueError("landmark visibility outside [0, 1]")

    @property
    def coords(self) -> np.ndarray:
        """The (33, 3) xyz block."""
        return self.landmarks[:, :3]

    @property
    def visibility(self) -> np.ndarray:
        return self.landmarks[:, 3]


def frames_to_array(frames) -> np.ndarray:
    """Stack frames into a (n, 33, 4) array (no copy when already an array)."""
    if isinstance(frames, np.ndarray):
        if frames.ndim != 3 or frames.shape[1:] != (N_LANDMARKS, 4):
            raise ValueError(f"expected (n, 33, 4) array, got {frames.shape}")
        return frames.astype(np.float64, copy=False)
    return np.stack([as_landmark_array(f.landmarks) for f in frames])


def required_landmarks(sides=("LEFT", "RIGHT"), triplets=None) -> frozenset:
    """Landmark indices that must be visible for the given sides' angles."""
    table = JOINT_TRIPLETS if triplets is None else triplets
    needed = set()
    for side in sides:
        for triplet in table[side].values():
            needed.update(triplet)
    return frozenset(needed)


def frame_is_valid(frame_landmarks, required, min_visibility=DEFAULT_MIN_VISIBILITY) -> bool:
    """True when every required landmark clears the visibility threshold."""
    arr = np.asarray(frame_landmarks, dtype=np.float64)
    idx = sorted(required)
    return bool(np.all(arr[idx, 3] >= min_visibility))
