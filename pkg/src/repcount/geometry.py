"""Joint angles and fused landmark+angle feature vectors.

Five joint angles (elbow, shoulder, hip, knee, ankle) are interior angles
at the middle landmark of each triplet in `landmarks.JOINT_TRIPLETS`,
computed in 3-D so they are invariant to rotation, translation and uniform
scaling of the body. Feature vectors concatenate the 99 flattened x,y,z
coordinates with the selected angles divided by 180.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import DegenerateSegment, SideMismatch
from .landmarks import (
    JOINT_NAMES,
    JOINT_TRIPLETS,
    N_LANDMARKS,
    as_landmark_array,
    frames_to_array,
)

SEGMENT_EPS = 1e-9


class Side(Enum):
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    AVERAGE = "AVERAGE"


class FeatureMode(Enum):
    """Which angle block, if any, is appended to the 99 coordinates."""

    LANDMARKS_ONLY = "landmarks"
    LANDMARKS_LEFT5 = "left5"
    LANDMARKS_LR10 = "lr10"
    LANDMARKS_AVG5 = "avg5"

    @property
    def n_angles(self) -> int:
        return {"landmarks": 0, "left5": 5, "lr10": 10, "avg5": 5}[self.value]

    @property
    def dim(self) -> int:
        """Feature dimension with the default x,y,z coordinate layout."""
        return 3 * N_LANDMARKS + self.n_angles

    @classmethod
    def parse(cls, value) -> "FeatureMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown feature mode {value!r}; expected one of {names}") from None


def feature_dim(mode, include_z=True, include_visibility=False) -> int:
    """Feature dimension for a mode under a given coordinate layout."""
    mode = FeatureMode.parse(mode)
    per_landmark = 2 + int(include_z) + int(include_visibility)
    return per_landmark * N_LANDMARKS + mode.n_angles


@dataclass(frozen=True, slots=True)
class AngleSet:
    """The five joint angles in degrees for one side (or the L/R average)."""

    elbow_deg: float
    shoulder_deg: float
    hip_deg: float
    knee_deg: float
    ankle_deg: float
    side: Side

    def __post_init__(self):
        for name, value in zip(JOINT_NAMES, self.as_array()):
            if not 0.0 <= value <= 180.0:
                raise ValueError(f"{name} angle {value} outside [0, 180]")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.elbow_deg, self.shoulder_deg, self.hip_deg, self.knee_deg, self.ankle_deg]
        )

    @classmethod
    def from_array(cls, values, side: Side) -> "AngleSet":
        e, s, h, k, a = (float(v) for v in values)
        return cls(e, s, h, k, a, side)


@dataclass(frozen=True, slots=True)
class FeatureVector:
    """Fused landmark+angle features for one frame."""

    mode: FeatureMode
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1:
            raise ValueError("feature values must be one-dimensional")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def compute_joint_angle(a, b, c) -> float:
    """Interior angle at vertex b between rays b->a and b->c, in degrees.

    The cosine is clamped to [-1, 1] before arccos so floating-point
    round-off near collinear configurations cannot raise domain errors.
    Raises DegenerateSegment when either segment is shorter than 1e-9.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    ba = a - b
    bc = c - b
    nba = np.linalg.norm(ba)
    nbc = np.linalg.norm(bc)
    if nba < SEGMENT_EPS or nbc < SEGMENT_EPS:
        raise DegenerateSegment(f"segment length below {SEGMENT_EPS}")
    cosang = np.clip(np.dot(ba, bc) / (nba * nbc), -1.0, 1.0)
    return float(np.degrees(np.arccos(cosang)))


def _triplet_indices(side: str, triplets) -> np.ndarray:
    table = JOINT_TRIPLETS if triplets is None else triplets
    return np.array([table[side][joint] for joint in JOINT_NAMES], dtype=np.intp)


def sequence_angles(coords, side, triplets=None) -> np.ndarray:
    """Five joint angles for every frame of a coordinate sequence.

    `coords` is (n, 33, 3) (or (n, 33, 4); extra columns are ignored) and
    the result is (n, 5) degrees in joint order elbow, shoulder, hip, knee,
    ankle. Degenerate segments yield NaN here rather than raising; the
    per-frame wrappers turn NaN into DegenerateSegment.
    """
    xyz = np.asarray(coords, dtype=np.float64)[:, :, :3]
    side = side.value if isinstance(side, Side) else str(side)
    idx = _triplet_indices(side, triplets)
    a = xyz[:, idx[:, 0], :]
    b = xyz[:, idx[:, 1], :]
    c = xyz[:, idx[:, 2], :]
    ba = a - b
    bc = c - b
    nba = np.linalg.norm(ba, axis=2)
    nbc = np.linalg.norm(bc, axis=2)
    denom = nba * nbc
    bad = (nba < SEGMENT_EPS) | (nbc < SEGMENT_EPS)
    denom[bad] = 1.0
    cosang = np.clip(np.einsum("njk,njk->nj", ba, bc) / denom, -1.0, 1.0)
    angles = np.degrees(np.arccos(cosang))
    angles[bad] = np.nan
    return angles


def five_joint_angles(frame, side, triplets=None) -> AngleSet:
    """AngleSet for one frame and one body side (LEFT or RIGHT)."""
    side = Side(side) if not isinstance(side, Side) else side
    if side is Side.AVERAGE:
        raise ValueError("five_joint_angles needs LEFT or RIGHT; use average_angles")
    arr = as_landmark_array(frame.landmarks)
    angles = sequence_angles(arr[np.newaxis], side, triplets)[0]
    if np.any(np.isnan(angles)):
        joint = JOINT_NAMES[int(np.argmax(np.isnan(angles)))]
        raise DegenerateSegment(
            f"degenerate {joint} segment in frame {frame.frame_index}", joint=joint
        )
    return AngleSet.from_array(angles, side)


def average_angles(left: AngleSet, right: AngleSet) -> AngleSet:
    """Componentwise mean of a LEFT and a RIGHT angle set."""
    if left.side is not Side.LEFT or right.side is not Side.RIGHT:
        raise SideMismatch(
            f"expected (LEFT, RIGHT) angle sets, got ({left.side.name}, {right.side.name})"
        )
    return AngleSet.from_array((left.as_array() + right.as_array()) / 2.0, Side.AVERAGE)


def _angle_block(coords, mode, triplets):
    """Per-frame normalized angle features for a mode; (n, n_angles)."""
    mode = FeatureMode.parse(mode)
    if mode is FeatureMode.LANDMARKS_ONLY:
        return np.empty((np.asarray(coords).shape[0], 0))
    left = sequence_angles(coords, Side.LEFT, triplets)
    if mode is FeatureMode.LANDMARKS_LEFT5:
        block = left
    else:
        right = sequence_angles(coords, Side.RIGHT, triplets)
        if mode is FeatureMode.LANDMARKS_LR10:
            block = np.concatenate([left, right], axis=1)
        else:
            block = (left + right) / 2.0
    return block / 180.0


def assemble_feature_matrix(
    frames, mode, triplets=None, include_z=True, include_visibility=False
) -> np.ndarray:
    """Feature rows for a whole sequence; (n, feature_dim(mode, ...)).

    Layout per row: flattened per-landmark components in landmark order
    0..32 (component order x, y, z, visibility as enabled), then the mode's
    angles divided by 180 — left block before right block for LR10.
    Frames whose required angle segments are degenerate get NaN angle
    features; callers that need hard failures use assemble_features.
    """
    arr = frames_to_array(frames)
    cols = [0, 1]
    if include_z:
        cols.append(2)
    if include_visibility:
        cols.append(3)
    flat = arr[:, :, cols].reshape(arr.shape[0], -1)
    angles = _angle_block(arr, mode, triplets)
    return np.concatenate([flat, angles], axis=1)


def assemble_features(
    frame, mode, triplets=None, include_z=True, include_visibility=False
) -> FeatureVector:
    """FeatureVector for one frame; raises DegenerateSegment on bad limbs."""
    mode = FeatureMode.parse(mode)
    row = assemble_feature_matrix(
        frames_to_array([frame]), mode, triplets, include_z, include_visibility
    )[0]
    if np.any(np.isnan(row)):
        raise DegenerateSegment(f"degenerate segment in frame {frame.frame_index}")
    expected = feature_dim(mode, include_z, include_visibility)
    assert row.shape[0] == expected, f"feature dim {row.shape[0]} != {expected}"
    return FeatureVector(mode=mode, values=row)


class PoseFeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer: landmark frames -> fused feature matrix.

    Accepts a list of LandmarkFrame or an (n, 33, 4) array and returns an
    (n, d) float array, d per `feature_dim`. Fits nothing; it exists so the
    featurization step drops into sklearn pipelines.
    """

    def __init__(self, mode="avg5", include_z=True, include_visibility=False, triplets=None):
        self.mode = mode
        self.include_z = include_z
        self.include_visibility = include_visibility
        self.triplets = triplets

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        out = assemble_feature_matrix(
            X,
            FeatureMode.parse(self.mode),
            triplets=self.triplets,
            include_z=self.include_z,
            include_visibility=self.include_visibility,
        )
        if np.any(np.isnan(out)):
            bad = int(np.where(np.isnan(out).any(axis=1))[0][0])
            raise DegenerateSegment(f"degenerate segment in sequence position {bad}")
        return out

    @property
    def n_features_out_(self) -> int:
        return feature_dim(self.mode, self.include_z, self.include_visibility)
