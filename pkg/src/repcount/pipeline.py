"""End-to-end wiring: landmark sequences -> density maps -> counts.

Frames whose required landmarks fall below the visibility threshold (or
whose angle segments are degenerate) are flagged invalid; their score is
the carry-forward of the last valid score so smoothing sees no spurious
spikes, and the trigger ignores them for state changes.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .geometry import FeatureMode, Side, assemble_feature_matrix, sequence_angles
from .landmarks import DEFAULT_MIN_VISIBILITY, frames_to_array, required_landmarks
from .scorer import (
    GeometricRule,
    ScorerModel,
    geometric_score_array,
    load_checkpoint,
    score_matrix,
)
from .trigger import CountResult, DensityMap, TriggerConfig, count_reps

NEUTRAL_SCORE = 0.5


def _carry_forward(raw, valid, fill=NEUTRAL_SCORE):
    """Replace invalid entries with the last valid value (fill before any)."""
    n = raw.shape[0]
    last_valid = np.maximum.accumulate(np.where(valid, np.arange(n), -1))
    return np.where(last_valid >= 0, raw[np.maximum(last_valid, 0)], fill)


def _sides_for(side):
    side = Side(side.upper()) if isinstance(side, str) else side
    return ("LEFT", "RIGHT") if side is Side.AVERAGE else (side.value,)


def geometric_density(
    frames,
    rule: GeometricRule,
    side=Side.AVERAGE,
    min_visibility=DEFAULT_MIN_VISIBILITY,
    triplets=None,
    video_id="",
    action="",
) -> DensityMap:
    """Score every frame with the geometric ramp on one joint angle."""
    arr = frames_to_array(frames)
    sides = _sides_for(side)
    angle_stack = [sequence_angles(arr, s, triplets) for s in sides]
    angles = angle_stack[0] if len(angle_stack) == 1 else (angle_stack[0] + angle_stack[1]) / 2.0

    required = sorted(required_landmarks(sides, triplets))
    valid = np.all(arr[:, required, 3] >= min_visibility, axis=1)
    valid &= np.all(np.isfinite(angles), axis=1)

    raw = np.where(valid, geometric_score_array(np.nan_to_num(angles), rule), 0.0)
    scores = _carry_forward(raw, valid)
    return DensityMap(video_id=video_id, action=action, scores=scores, valid_mask=valid)


def model_density(
    frames,
    model: ScorerModel,
    action,
    min_visibility=DEFAULT_MIN_VISIBILITY,
    triplets=None,
    video_id="",
) -> DensityMap:
    """Score every frame with a trained scorer's head for `action`."""
    arr = frames_to_array(frames)
    features = assemble_feature_matrix(arr, model.mode, triplets=triplets)

    required = sorted(required_landmarks(("LEFT", "RIGHT"), triplets))
    valid = np.all(arr[:, required, 3] >= min_visibility, axis=1)
    valid &= np.all(np.isfinite(features), axis=1)

    raw = score_matrix(model, np.nan_to_num(features), action)
    scores = _carry_forward(np.where(valid, raw, 0.0), valid)
    return DensityMap(video_id=video_id, action=action, scores=scores, valid_mask=valid)


class RepetitionCounter(BaseEstimator):
    """Count repetitions in a landmark sequence.

    Exactly one scoring source must be set: `rule` (a GeometricRule) or
    `model` (a ScorerModel or checkpoint path, with `action` choosing the
    head). predict() returns the repetition count for one sequence;
    density() and count() expose the intermediate results.
    """

    def __init__(
        self,
        rule=None,
        model=None,
        action=None,
        side="average",
        upper=0.8,
        lower=0.2,
        smoothing_window=3,
        min_visibility=DEFAULT_MIN_VISIBILITY,
    ):
        self.rule = rule
        self.model = model
        self.action = action
        self.side = side
        self.upper = upper
        self.lower = lower
        self.smoothing_window = smoothing_window
        self.min_visibility = min_visibility

    def fit(self, X=None, y=None):
        return self

    def _trigger_config(self) -> TriggerConfig:
        return TriggerConfig(
            upper=self.upper, lower=self.lower, smoothing_window=self.smoothing_window
        )

    def density(self, X, video_id="") -> DensityMap:
        if (self.rule is None) == (self.model is None):
            raise ValueError("set exactly one of rule or model")
        if self.rule is not None:
            return geometric_density(
                X,
                self.rule,
                side=self.side,
                min_visibility=self.min_visibility,
                video_id=video_id,
                action=self.action or self.rule.joint,
            )
        model = self.model
        if not isinstance(model, ScorerModel):
            model = load_checkpoint(model)
        action = self.action or model.action_names[0]
        return model_density(
            X, model, action, min_visibility=self.min_visibility, video_id=video_id
        )

    def count(self, X, video_id="") -> CountResult:
        return count_reps(self.density(X, video_id=video_id), self._trigger_config())

    def predict(self, X) -> int:
        return self.count(X).count
