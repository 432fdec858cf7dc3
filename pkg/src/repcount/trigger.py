"""Density maps and the hysteresis action trigger.

A repetition is one ordered pose-I -> pose-II transition of the smoothed
score sequence: the machine arms when the score reaches the upper limit and
fires (counts) when it then falls to the lower limit. Scores strictly
between the limits never change state, which is what suppresses
jitter-induced double counts. A trailing armed state without a lower
crossing is not counted.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BadWindow


@dataclass(slots=True)
class DensityMap:
    """Per-frame saliency scores in [0, 1] for one video and one action."""

    video_id: str
    action: str
    scores: np.ndarray
    valid_mask: np.ndarray = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 1:
            raise ValueError("scores must be one-dimensional")
        if self.valid_mask is None:
            self.valid_mask = np.ones(self.scores.shape, dtype=bool)
        self.valid_mask = np.asarray(self.valid_mask, dtype=bool)
        if self.valid_mask.shape != self.scores.shape:
            raise ValueError("scores and valid_mask must have the same length")
        if self.scores.size and (np.nanmin(self.scores) < 0 or np.nanmax(self.scores) > 1):
            raise ValueError("scores must lie in [0, 1]")

    def __len__(self):
        return self.scores.shape[0]


@dataclass(frozen=True, slots=True)
class TriggerConfig:
    """Hysteresis limits and the pre-trigger smoothing window (odd, >= 1)."""

    upper: float = 0.8
    lower: float = 0.2
    smoothing_window: int = 3

    def __post_init__(self):
        if not 0.0 <= self.lower < self.upper <= 1.0:
            raise ValueError(
                f"need 0 <= lower < upper <= 1, got lower={self.lower} upper={self.upper}"
            )
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ValueError(f"smoothing_window must be odd >= 1, got {self.smoothing_window}")


class TriggerState(Enum):
    NEUTRAL = "NEUTRAL"
    SEEN_I = "SEEN_I"


@dataclass(frozen=True, slots=True)
class RepEvent:
    """One counted repetition; frames are indices into the score array."""

    rep_index: int
    pose_i_frame: int
    pose_ii_frame: int


@dataclass(frozen=True, slots=True)
class CountResult:
    count: int
    events: tuple
    final_state: TriggerState

    def __post_init__(self):
        if self.count != len(self.events):
            raise ValueError("count must equal the number of events")
        last = -1
        for ev in self.events:
            if not last < ev.pose_i_frame < ev.pose_ii_frame:
                raise ValueError("event frames must be strictly increasing")
            last = ev.pose_ii_frame


def smooth(scores, window) -> np.ndarray:
    """Centered moving average; windows shrink at the boundaries.

    Length-preserving; window must be odd and within [1, len(scores)].
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if window % 2 == 0 or window < 1 or window > n:
        raise BadWindow(f"window must be odd in [1, {n}], got {window}")
    if window == 1:
        return scores.copy()
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(scores)])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    out = (csum[hi + 1] - csum[lo]) / (hi + 1 - lo)
    # window means lie in [min, max] of the inputs; clip the float drift so
    # the range property holds exactly (constant input stays bit-identical)
    return np.clip(out, scores.min(), scores.max())


def _effective_window(window, n) -> int:
    """Largest odd window <= min(window, n); 1 when the sequence is tiny."""
    w = min(window, n)
    if w % 2 == 0:
        w -= 1
    return max(w, 1)


def count_reps(density: DensityMap, config: TriggerConfig = TriggerConfig()) -> CountResult:
    """Run the two-state hysteresis machine over the smoothed density map.

    Invalid frames (mask false) never change state. An empty (or fully
    masked) map counts zero. The configured window is clipped down to the
    sequence length so short clips still count.
    """
    n = len(density)
    if n == 0:
        return CountResult(count=0, events=(), final_state=TriggerState.NEUTRAL)
    smoothed = smooth(density.scores, _effective_window(config.smoothing_window, n))

    state = TriggerState.NEUTRAL
    pose_i_frame = -1
    events = []
    for i in range(n):
        if not density.valid_mask[i]:
            continue
        s = smoothed[i]
        if state is TriggerState.NEUTRAL:
            if s >= config.upper:
                state = TriggerState.SEEN_I
                pose_i_frame = i
        else:
            if s <= config.lower:
                events.append(
                    RepEvent(
                        rep_index=len(events) + 1,
                        pose_i_frame=pose_i_frame,
                        pose_ii_frame=i,
                    )
                )
                state = TriggerState.NEUTRAL
    return CountResult(count=len(events), events=tuple(events), final_state=state)


def density_csv(density: DensityMap) -> bytes:
    """CSV export: header `frame,score,valid`, scores at 6 decimals."""
    lines = ["frame,score,valid"]
    for i in range(len(density)):
        valid = "true" if density.valid_mask[i] else "false"
        lines.append(f"{i},{density.scores[i]:.6f},{valid}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def events_csv(result: CountResult, video_id: str) -> bytes:
    """CSV export of counted events for one video."""
    lines = ["video_id,rep_index,pose_I_frame,pose_II_frame"]
    for ev in result.events:
        lines.append(f"{video_id},{ev.rep_index},{ev.pose_i_frame},{ev.pose_ii_frame}")
    return ("\n".join(lines) + "\n").encode("utf-8")
