"""MAE/OBO evaluation, ground-truth corrections, and feature-mode ranking.

MAE is the mean over videos of |gt - pred| / gt; OBO is the fraction of
videos whose prediction lands within one of the ground truth (inclusive).
Ground truth below 1 is rejected outright since MAE divides by it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicatePrediction,
    MissingPrediction,
    StaleCorrection,
    ZeroGroundTruth,
)
from .geometry import FeatureMode


@dataclass(frozen=True, slots=True)
class VideoAnnotation:
    """Ground truth for one video; salient frame lists are optional and
    only used to build scorer training sets."""

    video_id: str
    ground_truth_count: int
    action: str = ""
    salient_i_frames: tuple = ()
    salient_ii_frames: tuple = ()

    def __post_init__(self):
        if self.ground_truth_count < 1:
            raise ZeroGroundTruth(
                f"video {self.video_id!r}: ground-truth count must be >= 1, "
                f"got {self.ground_truth_count}"
            )
        for name in ("salient_i_frames", "salient_ii_frames"):
            frames = tuple(int(f) for f in getattr(self, name))
            object.__setattr__(self, name, frames)
            if any(b <= a for a, b in zip(frames, frames[1:])):
                raise ValueError(f"{name} must be strictly increasing")


@dataclass(frozen=True, slots=True)
class Prediction:
    video_id: str
    predicted_count: int

    def __post_init__(self):
        if self.predicted_count < 0:
            raise ValueError(f"predicted_count must be >= 0, got {self.predicted_count}")


@dataclass(frozen=True, slots=True)
class PerVideoResult:
    video_id: str
    ground_truth: int
    predicted: int
    abs_err_normalized: float
    within_one: bool


@dataclass(frozen=True, slots=True)
class EvalReport:
    """Aggregates plus per-video rows. evaluate() guarantees the aggregate
    fields equal the row means; fixture reports built by hand may carry
    published aggregates with no rows."""

    n_videos: int
    mae: float
    obo: float
    per_video: tuple = ()


@dataclass(frozen=True, slots=True)
class Correction:
    video_id: str
    wrong_count: int
    corrected_count: int
    reason: str = ""


@dataclass(frozen=True, slots=True)
class CorrectionLedger:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for entry in self.entries:
            if entry.video_id in seen:
                raise ValueError(f"duplicate ledger entry for {entry.video_id!r}")
            seen.add(entry.video_id)


def evaluate(annotations, predictions) -> EvalReport:
    """MAE/OBO over matched (annotation, prediction) pairs.

    Every annotation needs exactly one prediction; predictions for unknown
    video ids are ignored. Pairing is by video_id, and the report rows keep
    the annotation order.
    """
    by_id = {}
    for pred in predictions:
        if pred.video_id in by_id:
            raise DuplicatePrediction(pred.video_id)
        by_id[pred.video_id] = pred
    if not annotations:
        raise ValueError("need at least one annotation")

    rows = []
    for anno in annotations:
        if anno.ground_truth_count < 1:
            raise ZeroGroundTruth(f"video {anno.video_id!r} has count {anno.ground_truth_count}")
        if anno.video_id not in by_id:
            raise MissingPrediction(anno.video_id)
        pred = by_id[anno.video_id]
        diff = abs(anno.ground_truth_count - pred.predicted_count)
        rows.append(
            PerVideoResult(
                video_id=anno.video_id,
                ground_truth=anno.ground_truth_count,
                predicted=pred.predicted_count,
                abs_err_normalized=diff / anno.ground_truth_count,
                within_one=diff <= 1,
            )
        )
    mae = float(np.mean([r.abs_err_normalized for r in rows]))
    obo = float(np.mean([1.0 if r.within_one else 0.0 for r in rows]))
    return EvalReport(n_videos=len(rows), mae=mae, obo=obo, per_video=tuple(rows))


def apply_corrections(annotations, ledger: CorrectionLedger):
    """Substitute corrected ground-truth counts; reject stale entries.

    Each ledger entry must match the current annotation value exactly, so
    re-applying an already-applied ledger fails loudly instead of silently
    double-correcting.
    """
    by_id = {entry.video_id: entry for entry in ledger.entries}
    out = []
    seen = set()
    for anno in annotations:
        entry = by_id.get(anno.video_id)
        if entry is None:
            out.append(anno)
            continue
        seen.add(anno.video_id)
        if anno.ground_truth_count != entry.wrong_count:
            raise StaleCorrection(
                f"video {anno.video_id!r}: ledger expects current count "
                f"{entry.wrong_count}, found {anno.ground_truth_count}"
            )
        out.append(
            VideoAnnotation(
                video_id=anno.video_id,
                ground_truth_count=entry.corrected_count,
                action=anno.action,
                salient_i_frames=anno.salient_i_frames,
                salient_ii_frames=anno.salient_ii_frames,
            )
        )
    missing = set(by_id) - seen
    if missing:
        raise StaleCorrection(f"ledger entries for unknown videos: {sorted(missing)}")
    return out


@dataclass(frozen=True, slots=True)
class RankedComparison:
    """Feature modes ordered by ascending MAE, ties broken by descending OBO."""

    rows: tuple  # of (FeatureMode, EvalReport)

    def to_text(self) -> str:
        lines = [f"{'rank':<5}{'mode':<12}{'MAE':>8}  {'OBO':>6}  {'videos':>7}"]
        for rank, (mode, report) in enumerate(self.rows, start=1):
            lines.append(
                f"{rank:<5}{mode.value:<12}{report.mae:>8.3f}  {report.obo:>6.3f}  "
                f"{report.n_videos:>7}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> bytes:
        lines = ["rank,mode,mae,obo,n_videos"]
        for rank, (mode, report) in enumerate(self.rows, start=1):
            lines.append(f"{rank},{mode.value},{report.mae:.6f},{report.obo:.6f},{report.n_videos}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    def best_mode(self) -> FeatureMode:
        return self.rows[0][0]


def compare_modes(reports) -> RankedComparison:
    """Rank a {FeatureMode: EvalReport} map. Needs at least two entries."""
    if len(reports) < 2:
        raise ValueError("need at least two reports to compare")
    ordered = sorted(
        ((FeatureMode.parse(mode), report) for mode, report in reports.items()),
        key=lambda item: (item[1].mae, -item[1].obo, item[0].value),
    )
    return RankedComparison(rows=tuple(ordered))


def report_csv(report: EvalReport, corrections_note="") -> bytes:
    """Per-video rows plus a trailing comment summary line.

    The summary records which correction ledger (if any) was active when
    the report was produced.
    """
    lines = ["video_id,gt,pred,norm_err,within_one"]
    for row in report.per_video:
        flag = "true" if row.within_one else "false"
        lines.append(
            f"{row.video_id},{row.ground_truth},{row.predicted},"
            f"{row.abs_err_normalized:.6f},{flag}"
        )
    note = f" corrections={corrections_note}" if corrections_note else ""
    lines.append(
        f"# summary n_videos={report.n_videos} mae={report.mae:.6f} obo={report.obo:.6f}{note}"
    )
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_report_csv(data) -> EvalReport:
    """Read back a report_csv blob (rows optional, summary authoritative)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    rows = []
    summary = None
    for line_no, line in enumerate(data.split("\n"), start=1):
        if not line or line_no == 1:
            continue
        if line.startswith("# summary"):
            fields = dict(
                token.split("=", 1) for token in line[len("# summary") :].split() if "=" in token
            )
            summary = (
                int(fields["n_videos"]),
                float(fields["mae"]),
                float(fields["obo"]),
            )
            continue
        video_id, gt, pred, err, flag = line.split(",")
        rows.append(
            PerVideoResult(
                video_id=video_id,
                ground_truth=int(gt),
                predicted=int(pred),
                abs_err_normalized=float(err),
                within_one=flag == "true",
            )
        )
    if summary is None:
        raise ValueError("report CSV missing its summary line")
    n_videos, mae, obo = summary
    return EvalReport(n_videos=n_videos, mae=mae, obo=obo, per_video=tuple(rows))
