import numpy as np
import pytest

from repcount import landmarks as lm
from repcount.landmarks import LandmarkFrame, N_LANDMARKS


def frame_from_points(points, frame_index=0, visibility=1.0, default=(0.0, 0.0, 0.0)):
    """Build a LandmarkFrame from {landmark_index: (x, y, z)}.

    Unlisted landmarks sit at `default` offset by a tiny per-index shift so
    no two coincide (keeps unrelated segments non-degenerate).
    """
    arr = np.zeros((N_LANDMARKS, 4))
    for i in range(N_LANDMARKS):
        arr[i, :3] = np.asarray(default) + np.array([0.001 * i, 0.002 * i, 0.0])
        arr[i, 3] = visibility
    for idx, xyz in points.items():
        arr[idx, :3] = xyz
    return LandmarkFrame(frame_index=frame_index, landmarks=arr)


def t_pose_points():
    """Arms horizontal, legs vertical; straight elbows and knees."""
    pts = {}
    for side, sx in (("L", 1.0), ("R", -1.0)):
        sh = (0.5 * sx, 1.0, 0.0)
        pts.update(
            {
                (lm.LEFT_SHOULDER if side == "L" else lm.RIGHT_SHOULDER): sh,
                (lm.LEFT_ELBOW if side == "L" else lm.RIGHT_ELBOW): (1.0 * sx, 1.0, 0.0),
                (lm.LEFT_WRIST if side == "L" else lm.RIGHT_WRIST): (1.5 * sx, 1.0, 0.0),
                (lm.LEFT_HIP if side == "L" else lm.RIGHT_HIP): (0.3 * sx, 0.0, 0.0),
                (lm.LEFT_KNEE if side == "L" else lm.RIGHT_KNEE): (0.3 * sx, -1.0, 0.0),
                (lm.LEFT_ANKLE if side == "L" else lm.RIGHT_ANKLE): (0.3 * sx, -2.0, 0.0),
                (lm.LEFT_HEEL if side == "L" else lm.RIGHT_HEEL): (0.2 * sx, -2.1, 0.0),
                (lm.LEFT_FOOT_INDEX if side == "L" else lm.RIGHT_FOOT_INDEX): (
                    0.6 * sx,
                    -2.0,
                    0.1,
                ),
            }
        )
    return pts


def right_angle_squat_points():
    """Knee at exactly 90 degrees by construction (thigh horizontal, shank vertical)."""
    pts = t_pose_points()
    for side, sx in (("L", 1.0), ("R", -1.0)):
        hip = lm.LEFT_HIP if side == "L" else lm.RIGHT_HIP
        knee = lm.LEFT_KNEE if side == "L" else lm.RIGHT_KNEE
        ankle = lm.LEFT_ANKLE if side == "L" else lm.RIGHT_ANKLE
        sh = lm.LEFT_SHOULDER if side == "L" else lm.RIGHT_SHOULDER
        pts[knee] = (0.3 * sx, 0.0, 0.0)
        pts[hip] = (0.3 * sx, 0.0, -0.8)  # thigh along -z, horizontal
        pts[ankle] = (0.3 * sx, -0.8, 0.0)  # shank straight down from the knee
        pts[sh] = (0.5 * sx, 1.0, -0.8)
    return pts


@pytest.fixture
def t_pose_frame():
    return frame_from_points(t_pose_points())


@pytest.fixture
def squat_frame():
    return frame_from_points(right_angle_squat_points())


def rotation_matrix(yaw, pitch, roll):
    """Intrinsic z-y-x rotation from three angles in radians."""
    cz, sz = np.cos(yaw), np.sin(yaw)
    cy, sy = np.cos(pitch), np.sin(pitch)
    cx, sx = np.cos(roll), np.sin(roll)
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    return rz @ ry @ rx


def transform_frame(frame, rotation=None, translation=None, scale=1.0):
    """Apply scale, rotation, translation to every landmark; visibility kept."""
    arr = frame.landmarks.copy()
    xyz = arr[:, :3] * scale
    if rotation is not None:
        xyz = xyz @ np.asarray(rotation).T
    if translation is not None:
        xyz = xyz + np.asarray(translation)
    arr[:, :3] = xyz
    return LandmarkFrame(frame_index=frame.frame_index, landmarks=arr, timestamp_ms=frame.timestamp_ms)
