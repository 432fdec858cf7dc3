"""Synthetic labeled motion for exercising the whole pipeline at desk scale.

Each action template defines two full-body salient poses on a canonical
stick figure (unit torso) with the tracked joint angle set exactly by
construction: squat tracks the knee (180 standing, 90 deep), pull-up the
elbow (180 hanging, 60 chin-up), jumping jack the shoulder (20 down, 160
overhead). Frames interpolate all 33 landmarks between the two poses with
a raised-cosine profile per period, so the ground-truth count, the salient
frames and the expected score shape are all known exactly.

Adversarial knobs mirror the classic failure modes: a camera-yaw schedule
(pure rotation, must not change angles), coordinate noise, an incomplete
repetition (partial excursion that must not count), and a trailing
sub-action distractor that moves the body while keeping the tracked angle
mid-band.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BadSpec
from .landmarks import LandmarkFrame, N_LANDMARKS
from .landmarks import (
    LEFT_ANKLE,
    LEFT_ELBOW,
    LEFT_FOOT_INDEX,
    LEFT_HEEL,
    LEFT_HIP,
    LEFT_KNEE,
    LEFT_SHOULDER,
    LEFT_WRIST,
    RIGHT_ANKLE,
    RIGHT_ELBOW,
    RIGHT_FOOT_INDEX,
    RIGHT_HEEL,
    RIGHT_HIP,
    RIGHT_KNEE,
    RIGHT_SHOULDER,
    RIGHT_WRIST,
)
from .metrics import VideoAnnotation
from .scorer import GeometricRule


class ActionTemplate(Enum):
    SQUAT = "squat"
    JUMP_JACK = "jump_jack"
    PULL_UP = "pull_up"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(t.value for t in cls)
            raise BadSpec(f"unknown template {value!r}; expected one of {names}") from None


TEMPLATE_RULES = {
    ActionTemplate.SQUAT: GeometricRule("knee", angle_pose_i=180.0, angle_pose_ii=90.0),
    ActionTemplate.PULL_UP: GeometricRule("elbow", angle_pose_i=180.0, angle_pose_ii=60.0),
    ActionTemplate.JUMP_JACK: GeometricRule("shoulder", angle_pose_i=20.0, angle_pose_ii=160.0),
}


def template_rule(template) -> GeometricRule:
    """The geometric scoring rule matching a template's tracked joint."""
    return TEMPLATE_RULES[ActionTemplate.parse(template)]


@dataclass(frozen=True, slots=True)
class YawStep:
    """Camera yaw (degrees about the vertical axis) from start_frame onward."""

    start_frame: int
    yaw_degrees: float

    def __post_init__(self):
        if self.start_frame < 0:
            raise BadSpec(f"yaw start_frame must be >= 0, got {self.start_frame}")


@dataclass(frozen=True, slots=True)
class SynthSpec:
    action_template: ActionTemplate = ActionTemplate.SQUAT
    n_reps: int = 3
    period_frames: int = 30
    noise_std: float = 0.0
    camera_yaw_schedule: tuple = ()
    incomplete_rep_at: tuple = None  # (rep_index, completion_fraction)
    sub_action_at_end: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "action_template", ActionTemplate.parse(self.action_template))
        if self.n_reps < 0:
            raise BadSpec(f"n_reps must be >= 0, got {self.n_reps}")
        if self.period_frames < 4:
            raise BadSpec(f"period_frames must be >= 4, got {self.period_frames}")
        if self.noise_std < 0:
            raise BadSpec(f"noise_std must be >= 0, got {self.noise_std}")
        steps = tuple(
            step if isinstance(step, YawStep) else YawStep(*step)
            for step in self.camera_yaw_schedule
        )
        object.__setattr__(self, "camera_yaw_schedule", steps)
        if self.incomplete_rep_at is not None:
            rep_index, fraction = self.incomplete_rep_at
            if not 0 <= rep_index < self.n_reps:
                raise BadSpec(
                    f"incomplete rep index {rep_index} outside [0, {self.n_reps})"
                )
            if not 0.0 < fraction < 1.0:
                raise BadSpec(f"completion fraction must be strictly in (0,1), got {fraction}")
            object.__setattr__(self, "incomplete_rep_at", (int(rep_index), float(fraction)))

    @property
    def action(self) -> str:
        return self.action_template.value

    @property
    def video_id(self) -> str:
        tags = [f"{self.action}-{self.n_reps}x{self.period_frames}-s{self.seed}"]
        if self.noise_std > 0:
            tags.append("noisy")
        if self.camera_yaw_schedule:
            tags.append("yaw")
        if self.incomplete_rep_at is not None:
            tags.append(f"inc{self.incomplete_rep_at[0]}")
        if self.sub_action_at_end:
            tags.append("sub")
        return "-".join(tags)


@dataclass(slots=True)
class SynthOutput:
    """Generated sequence plus ground truth known by construction.

    `annotation` is None when true_count is 0 (a zero count cannot be
    annotated because the normalized error would divide by it).
    """

    video_id: str
    landmark_rows: np.ndarray  # (n, 33, 4)
    true_count: int
    annotation: VideoAnnotation
    salient_i_frames: tuple
    salient_ii_frames: tuple
    _frames: list = field(default=None, repr=False)

    @property
    def frames(self):
        if self._frames is None:
            self._frames = [
                LandmarkFrame(frame_index=i, landmarks=row)
                for i, row in enumerate(self.landmark_rows)
            ]
        return self._frames


def _mirror(index):
    """Left landmark index -> right counterpart (BlazePose pairing)."""
    return index + 1


def _base_body():
    """Shared skeleton chunks: head, torso, hands, feet offsets."""
    pose = np.zeros((N_LANDMARKS, 3))
    # head cluster around (0, 1.3, 0): nose, eyes, ears, mouth
    head = np.array(
        [
            [0.00, 1.30, -0.10],  # nose
            [0.03, 1.33, -0.09],
            [0.05, 1.33, -0.08],
            [0.07, 1.33, -0.07],  # left eye inner/center/outer
            [-0.03, 1.33, -0.09],
            [-0.05, 1.33, -0.08],
            [-0.07, 1.33, -0.07],  # right eye
            [0.09, 1.31, 0.00],
            [-0.09, 1.31, 0.00],  # ears
            [0.02, 1.26, -0.09],
            [-0.02, 1.26, -0.09],  # mouth corners
        ]
    )
    pose[0:11] = head
    pose[LEFT_SHOULDER] = [0.25, 1.0, 0.0]
    pose[RIGHT_SHOULDER] = [-0.25, 1.0, 0.0]
    pose[LEFT_HIP] = [0.15, 0.0, 0.0]
    pose[RIGHT_HIP] = [-0.15, 0.0, 0.0]
    return pose


_HAND_OFFSETS = {  # relative to the wrist; left side, x mirrored for right
    17: np.array([0.05, -0.07, 0.01]),  # pinky
    19: np.array([0.02, -0.08, 0.03]),  # index
    21: np.array([-0.02, -0.05, 0.04]),  # thumb
}
_FOOT_OFFSETS = {  # relative to the ankle
    LEFT_HEEL: np.array([0.0, -0.05, -0.07]),
    LEFT_FOOT_INDEX: np.array([0.02, -0.08, 0.18]),
}


def _attach_extremities(pose):
    for left_idx, offset in _HAND_OFFSETS.items():
        pose[left_idx] = pose[LEFT_WRIST] + offset
        pose[_mirror(left_idx)] = pose[RIGHT_WRIST] + offset * [-1, 1, 1]
    for left_idx, offset in _FOOT_OFFSETS.items():
        pose[left_idx] = pose[LEFT_ANKLE] + offset
        pose[_mirror(left_idx)] = pose[RIGHT_ANKLE] + offset * [-1, 1, 1]
    return pose


def _legs_straight(pose, ankle_x=0.15):
    for hip, knee, ankle, sx in (
        (LEFT_HIP, LEFT_KNEE, LEFT_ANKLE, 1.0),
        (RIGHT_HIP, RIGHT_KNEE, RIGHT_ANKLE, -1.0),
    ):
        top = pose[hip]
        direction = np.array([sx * ankle_x - top[0], -1.0, 0.0])
        direction = direction / np.linalg.norm(direction)
        pose[knee] = top + 0.5 * direction
        pose[ankle] = top + 1.0 * direction


def _arm_at_shoulder_angle(pose, degrees):
    """Straight arms at an exact interior angle (elbow-shoulder-hip).

    The arm direction is the shoulder->hip direction rotated outward (in
    the frontal plane) by `degrees`, so the shoulder angle equals `degrees`
    exactly on both sides.
    """
    for sh, el, wr, hip, sign in (
        (LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST, LEFT_HIP, 1.0),
        (RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST, RIGHT_HIP, -1.0),
    ):
        down = pose[hip] - pose[sh]
        down = down / np.linalg.norm(down)
        theta = np.radians(degrees) * sign
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        direction = rot @ down
        pose[el] = pose[sh] + 0.5 * direction
        pose[wr] = pose[sh] + 1.0 * direction


def _squat_poses():
    stand = _base_body()
    _legs_straight(stand)
    _arm_at_shoulder_angle(stand, 25.0)
    _attach_extremities(stand)

    deep = _base_body()
    drop = np.array([0.0, -0.5, -0.5])  # hips sink and shift back
    for idx in list(range(0, 11)) + [LEFT_SHOULDER, RIGHT_SHOULDER, LEFT_HIP, RIGHT_HIP]:
        deep[idx] = deep[idx] + drop
    for hip, knee, ankle, sx in (
        (LEFT_HIP, LEFT_KNEE, LEFT_ANKLE, 0.15),
        (RIGHT_HIP, RIGHT_KNEE, RIGHT_ANKLE, -0.15),
    ):
        # knee and ankle keep their standing spots; the thigh (knee->hip)
        # is horizontal and the shank vertical, a 90-degree knee exactly
        deep[knee] = [sx, -0.5, 0.0]
        deep[ankle] = [sx, -1.0, 0.0]
    _arm_at_shoulder_angle(deep, 25.0)
    _attach_extremities(deep)
    return stand, deep


def _pull_up_poses():
    hang = _base_body()
    _legs_straight(hang)
    for sh, el, wr in ((LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST), (RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST)):
        pose_x = hang[sh][0]
        hang[el] = [pose_x, 1.5, 0.0]
        hang[wr] = [pose_x, 2.0, 0.0]  # straight overhead, elbow exactly 180
    _attach_extremities(hang)

    lift = _base_body()
    rise = np.array([0.0, 0.5, 0.0])
    for idx in list(range(0, 11)) + [LEFT_SHOULDER, RIGHT_SHOULDER, LEFT_HIP, RIGHT_HIP]:
        lift[idx] = lift[idx] + rise
    _legs_straight(lift)
    for sh, el, wr, sign in (
        (LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST, 1.0),
        (RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST, -1.0),
    ):
        pose_x = lift[sh][0]
        lift[wr] = [pose_x, 2.0, 0.0]  # wrists stay on the bar
        # upper arm and forearm both 0.5 with |shoulder-wrist| = 0.5
        # puts the elbow angle at exactly 60 degrees (equilateral triangle)
        midpoint = (lift[sh] + lift[wr]) / 2.0
        lift[el] = midpoint + np.array([sign * np.sqrt(0.25 - 0.0625), 0.0, 0.0])
    _attach_extremities(lift)
    return hang, lift


def _jump_jack_poses():
    down = _base_body()
    _legs_straight(down, ankle_x=0.15)
    _arm_at_shoulder_angle(down, 20.0)
    _attach_extremities(down)

    up = _base_body()
    _legs_straight(up, ankle_x=0.45)  # legs swing apart, still straight
    _arm_at_shoulder_angle(up, 160.0)
    _attach_extremities(up)
    return down, up


_POSE_BUILDERS = {
    ActionTemplate.SQUAT: _squat_poses,
    ActionTemplate.PULL_UP: _pull_up_poses,
    ActionTemplate.JUMP_JACK: _jump_jack_poses,
}


def template_poses(template):
    """(pose_I, pose_II) landmark arrays for a template, (33, 3) each."""
    return _POSE_BUILDERS[ActionTemplate.parse(template)]()


SUB_ACTION_PHASE_BASE = 0.5
SUB_ACTION_PHASE_AMPLITUDE = 0.1
SUB_ACTION_BOUNCE = 0.12


def _phase_profile(spec: SynthSpec):
    """Per-frame interpolation phase in [0, 1]; 0 = pose I, 1 = pose II.

    Returns (phase, motion_frames, salient_i, salient_ii).
    """
    period = spec.period_frames
    if spec.n_reps == 0:
        return np.ones(period), period, (), ()
    u = np.arange(period) / period
    cycle = (1.0 - np.cos(2.0 * np.pi * u)) / 2.0
    phase = np.tile(cycle, spec.n_reps)
    salient_i = list(range(0, spec.n_reps * period, period))
    salient_ii = [r * period + period // 2 for r in range(spec.n_reps)]
    if spec.incomplete_rep_at is not None:
        rep_index, fraction = spec.incomplete_rep_at
        start = rep_index * period
        phase[start : start + period] = fraction * cycle
        salient_ii.remove(start + period // 2)
    return phase, phase.shape[0], tuple(salient_i), tuple(salient_ii)


def _yaw_per_frame(schedule, n) -> np.ndarray:
    yaw = np.zeros(n)
    for step in sorted(schedule, key=lambda s: s.start_frame):
        yaw[step.start_frame :] = step.yaw_degrees
    return yaw


def synthesize(spec: SynthSpec) -> SynthOutput:
    """Deterministically generate frames plus ground truth for a spec."""
    pose_i, pose_ii = template_poses(spec.action_template)
    phase, n_motion, salient_i, salient_ii = _phase_profile(spec)

    coords = (1.0 - phase)[:, None, None] * pose_i + phase[:, None, None] * pose_ii

    if spec.sub_action_at_end:
        period = spec.period_frames
        k = np.arange(period)
        wobble = SUB_ACTION_PHASE_BASE + SUB_ACTION_PHASE_AMPLITUDE * np.sin(
            2.0 * np.pi * k / period
        )
        distract = (1.0 - wobble)[:, None, None] * pose_i + wobble[:, None, None] * pose_ii
        bounce = SUB_ACTION_BOUNCE * np.abs(np.sin(4.0 * np.pi * k / period))
        distract[:, :, 1] += bounce[:, None]
        coords = np.concatenate([coords, distract], axis=0)

    n = coords.shape[0]
    yaw = np.radians(_yaw_per_frame(spec.camera_yaw_schedule, n))
    if np.any(yaw != 0.0):
        c, s = np.cos(yaw), np.sin(yaw)
        x = coords[:, :, 0].copy()
        z = coords[:, :, 2].copy()
        coords[:, :, 0] = c[:, None] * x + s[:, None] * z
        coords[:, :, 2] = -s[:, None] * x + c[:, None] * z

    if spec.noise_std > 0:
        rng = np.random.default_rng(spec.seed)
        coords = coords + rng.normal(0.0, spec.noise_std, size=coords.shape)

    rows = np.empty((n, N_LANDMARKS, 4))
    rows[:, :, :3] = coords
    rows[:, :, 3] = 1.0

    true_count = spec.n_reps - (1 if spec.incomplete_rep_at is not None else 0)
    annotation = None
    if true_count >= 1:
        annotation = VideoAnnotation(
            video_id=spec.video_id,
            ground_truth_count=true_count,
            action=spec.action,
            salient_i_frames=salient_i,
            salient_ii_frames=salient_ii,
        )
    return SynthOutput(
        video_id=spec.video_id,
        landmark_rows=rows,
        true_count=true_count,
        annotation=annotation,
        salient_i_frames=salient_i,
        salient_ii_frames=salient_ii,
    )
