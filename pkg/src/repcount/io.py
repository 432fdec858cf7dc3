"""Flat-file formats: landmark sequences, annotations, correction ledgers.

Landmark files (`.lmjsonl`) hold one frame per line:

    {"frame": <int>, "ts_ms": <number|-1>, "lm": [[x, y, z, vis] * 33]}

UTF-8, LF line endings. Writers emit canonical form (fixed field order,
6-decimal coordinates) so writing twice yields identical bytes and
parse(write(x)) returns x up to the 5e-7 quantization of coordinates.

Annotation CSV: header `video_id,count,action,salient_I,salient_II` (the
two salient columns optional on input), salient cells `;`-joined frame
indices. Correction ledger CSV: header `video_id,wrong,corrected,reason`.
"""

import csv
import io as _io
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateVideoId,
    IoFailure,
    NonMonotonicFrameIndex,
    ParseError,
    WrongLandmarkCount,
)
from .landmarks import N_LANDMARKS, LandmarkFrame
from .metrics import Correction, CorrectionLedger, VideoAnnotation

ANNOTATION_HEADER = "video_id,count,action,salient_I,salient_II"
ANNOTATION_HEADER_SHORT = "video_id,count,action"
LEDGER_HEADER = "video_id,wrong,corrected,reason"


@dataclass(slots=True)
class LandmarkSequenceFile:
    """A parsed landmark sequence; frame indices strictly increasing."""

    video_id: str
    frames: list
    path: str = ""

    def __post_init__(self):
        if not self.frames:
            raise ValueError("landmark sequence must contain at least one frame")
        for prev, cur in zip(self.frames, self.frames[1:]):
            if cur.frame_index <= prev.frame_index:
                raise ValueError("frame indices must be strictly increasing")


def _decode(data) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(0, f"not valid UTF-8: {exc}") from None
    return data


def _reject_constant(token):
    raise ValueError(f"non-finite literal {token!r}")


def parse_landmarks(data, video_id="") -> LandmarkSequenceFile:
    """Parse a `.lmjsonl` byte stream; malformed lines are reported with
    their 1-based line number. Blank lines are ignored."""
    frames = []
    last_index = -1
    for line_no, line in enumerate(_decode(data).split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line, parse_constant=_reject_constant)
        except ValueError as exc:
            raise ParseError(line_no, f"bad JSON: {exc}") from None
        if not isinstance(record, dict):
            raise ParseError(line_no, "record is not an object")
        if set(record.keys()) != {"frame", "ts_ms", "lm"}:
            raise ParseError(
                line_no, f"expected keys frame/ts_ms/lm, got {sorted(record.keys())}"
            )
        frame_index = record["frame"]
        if not isinstance(frame_index, int) or isinstance(frame_index, bool) or frame_index < 0:
            raise ParseError(line_no, f"frame must be a non-negative integer, got {frame_index!r}")
        if frame_index <= last_index:
            raise NonMonotonicFrameIndex(
                line_no, f"frame {frame_index} after {last_index} is not increasing"
            )
        ts_ms = record["ts_ms"]
        if isinstance(ts_ms, bool) or not isinstance(ts_ms, (int, float)):
            raise ParseError(line_no, f"ts_ms must be a number, got {ts_ms!r}")
        lm = record["lm"]
        if not isinstance(lm, list) or len(lm) != N_LANDMARKS:
            count = len(lm) if isinstance(lm, list) else "non-list"
            raise WrongLandmarkCount(line_no, f"expected 33 landmarks, got {count}")
        arr = np.empty((N_LANDMARKS, 4))
        for i, point in enumerate(lm):
            if (
                not isinstance(point, list)
                or len(point) != 4
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in point)
            ):
                raise ParseError(line_no, f"landmark {i} must be [x, y, z, vis] numbers")
            arr[i] = point
        try:
            frames.append(
                LandmarkFrame(frame_index=frame_index, landmarks=arr, timestamp_ms=float(ts_ms))
            )
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from None
        last_index = frame_index
    if not frames:
        raise ParseError(0, "no landmark records found")
    return LandmarkSequenceFile(video_id=video_id, frames=frames)


def _format_number(value: float) -> str:
    # shortest exact repr; integral values written without the trailing .0
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def write_landmarks(seq) -> bytes:
    """Canonical `.lmjsonl` bytes for a LandmarkSequenceFile or frame list."""
    frames = seq.frames if isinstance(seq, LandmarkSequenceFile) else list(seq)
    lines = []
    for frame in frames:
        points = ",".join(
            "[{:.6f},{:.6f},{:.6f},{:.6f}]".format(*frame.landmarks[i])
            for i in range(N_LANDMARKS)
        )
        lines.append(
            f'{{"frame": {int(frame.frame_index)}, '
            f'"ts_ms": {_format_number(frame.timestamp_ms)}, "lm": [{points}]}}'
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_salient_cell(cell, line_no):
    if not cell:
        return ()
    try:
        return tuple(int(token) for token in cell.split(";"))
    except ValueError:
        raise ParseError(line_no, f"bad salient frame list {cell!r}") from None


def parse_annotations(data):
    """Parse annotation CSV into VideoAnnotation objects.

    Accepts the 3-column or the 5-column header; an empty body yields an
    empty list.
    """
    text = _decode(data)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(0, "empty annotation file")
    header = lines[0]
    if header == ANNOTATION_HEADER:
        with_salient = True
    elif header == ANNOTATION_HEADER_SHORT:
        with_salient = False
    else:
        raise ParseError(1, f"bad header {header!r}")
    annotations = []
    seen = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        expected = 5 if with_salient else 3
        if len(cells) != expected:
            raise ParseError(line_no, f"expected {expected} columns, got {len(cells)}")
        video_id = cells[0]
        if video_id in seen:
            raise DuplicateVideoId(line_no, video_id)
        seen[video_id] = line_no
        try:
            count = int(cells[1])
        except ValueError:
            raise ParseError(line_no, f"bad count {cells[1]!r}") from None
        salient_i = _parse_salient_cell(cells[3], line_no) if with_salient else ()
        salient_ii = _parse_salient_cell(cells[4], line_no) if with_salient else ()
        try:
            annotations.append(
                VideoAnnotation(
                    video_id=video_id,
                    ground_truth_count=count,
                    action=cells[2],
                    salient_i_frames=salient_i,
                    salient_ii_frames=salient_ii,
                )
            )
        except Exception as exc:
            raise ParseError(line_no, str(exc)) from None
    return annotations


def _check_plain_field(value, what):
    if any(ch in value for ch in ",;\n\r"):
        raise ValueError(f"{what} {value!r} must not contain commas, semicolons or newlines")


def write_annotations(annotations) -> bytes:
    """Canonical 5-column annotation CSV."""
    lines = [ANNOTATION_HEADER]
    for anno in annotations:
        _check_plain_field(anno.video_id, "video_id")
        _check_plain_field(anno.action, "action")
        salient_i = ";".join(str(f) for f in anno.salient_i_frames)
        salient_ii = ";".join(str(f) for f in anno.salient_ii_frames)
        lines.append(
            f"{anno.video_id},{anno.ground_truth_count},{anno.action},{salient_i},{salient_ii}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_ledger(data) -> CorrectionLedger:
    """Parse correction-ledger CSV (reason column may be quoted)."""
    text = _decode(data)
    reader = csv.reader(_io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError(0, "empty ledger file")
    if rows[0] != LEDGER_HEADER.split(","):
        raise ParseError(1, f"bad header {','.join(rows[0])!r}")
    entries = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(line_no, f"expected 4 columns, got {len(row)}")
        try:
            entries.append(
                Correction(
                    video_id=row[0],
                    wrong_count=int(row[1]),
                    corrected_count=int(row[2]),
                    reason=row[3],
                )
            )
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from None
    try:
        return CorrectionLedger(entries=tuple(entries))
    except ValueError as exc:
        raise ParseError(0, str(exc)) from None


def write_ledger(ledger: CorrectionLedger) -> bytes:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LEDGER_HEADER.split(","))
    for entry in ledger.entries:
        writer.writerow(
            [entry.video_id, entry.wrong_count, entry.corrected_count, entry.reason]
        )
    return buf.getvalue().encode("utf-8")


def atomic_write_bytes(path, data: bytes):
    """Write via temp file + rename so readers never see partial output."""
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoFailure(f"cannot write {path}: {exc}") from None


def load_landmarks(path) -> LandmarkSequenceFile:
    path = os.fspath(path)
    with open(path, "rb") as fh:
        data = fh.read()
    video_id = os.path.basename(path)
    for suffix in (".lmjsonl", ".jsonl"):
        if video_id.endswith(suffix):
            video_id = video_id[: -len(suffix)]
            break
    seq = parse_landmarks(data, video_id=video_id)
    seq.path = path
    return seq


def save_landmarks(seq, path):
    atomic_write_bytes(path, write_landmarks(seq))


def load_annotations(path):
    with open(path, "rb") as fh:
        return parse_annotations(fh.read())


def save_annotations(annotations, path):
    atomic_write_bytes(path, write_annotations(annotations))


def load_ledger(path) -> CorrectionLedger:
    with open(path, "rb") as fh:
        return parse_ledger(fh.read())


def save_ledger(ledger, path):
    atomic_write_bytes(path, write_ledger(ledger))
