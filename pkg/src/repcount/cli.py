"""Command-line entry points: synth / validate / count / train / eval / compare.

Exit codes: 0 success, 2 parse or input error, 3 evaluation mismatch,
4 training failure, 1 anything else. Every failure also prints one
machine-readable JSON record on stderr. All file outputs are written
atomically (temp file, then rename) and are byte-deterministic for a given
config and inputs.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .errors import (
    BadSpec,
    DuplicatePrediction,
    EmptyDataset,
    IoFailure,
    MissingPrediction,
    MixedModes,
    NonFiniteLoss,
    ParseError,
    RepCountError,
    StaleCorrection,
    ZeroGroundTruth,
)
from .geometry import FeatureMode, assemble_feature_matrix
from .io import (
    atomic_write_bytes,
    load_annotations,
    load_landmarks,
    load_ledger,
    save_annotations,
    save_landmarks,
)
from .metrics import (
    Prediction,
    apply_corrections,
    compare_modes,
    evaluate,
    parse_report_csv,
    report_csv,
)
from .pipeline import RepetitionCounter
from .scorer import (
    LabeledPose,
    TrainConfig,
    checkpoint_bytes,
    load_checkpoint,
    train,
)
from .geometry import FeatureVector
from .synth import SynthSpec, YawStep, synthesize, template_rule
from .trigger import density_csv, events_csv

PARSE_ERROR_EXIT = 2
EVAL_ERROR_EXIT = 3
TRAIN_ERROR_EXIT = 4

_EXIT_CODES = (
    ((ParseError, BadSpec, FileNotFoundError, IsADirectoryError, ValueError), PARSE_ERROR_EXIT),
    ((MissingPrediction, DuplicatePrediction, ZeroGroundTruth, StaleCorrection), EVAL_ERROR_EXIT),
    ((EmptyDataset, MixedModes, NonFiniteLoss), TRAIN_ERROR_EXIT),
)


@dataclass(slots=True)
class RunConfig:
    """Everything a single CLI invocation needs; built from parsed flags."""

    command: str
    inputs: tuple = ()
    mode: str = "avg5"
    upper: float = 0.8
    lower: float = 0.2
    smooth: int = 3
    seed: int = 0
    model: str = ""
    rule: str = ""
    side: str = "average"
    action: str = ""
    ledger: str = ""
    out_dir: str = "."
    annotations: str = ""
    predictions: str = ""
    reports: tuple = ()
    out: str = ""
    epochs: int = 20
    learning_rate: float = 0.1
    batch_size: int = 0
    min_visibility: float = 0.3
    template: str = "squat"
    reps: int = 3
    period: int = 30
    noise: float = 0.0
    yaw: tuple = ()
    incomplete: str = ""
    sub_action: bool = False


def _error_record(exc) -> str:
    record = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        record["line"] = exc.line
    return json.dumps(record)


def _exit_code(exc) -> int:
    # zero-ground-truth is raised as a subclass of RepCountError only; check
    # the eval/train groups before the broad ValueError bucket
    for kinds, code in _EXIT_CODES[1:]:
        if isinstance(exc, kinds):
            return code
    for kinds, code in _EXIT_CODES[:1]:
        if isinstance(exc, kinds):
            return code
    return 1


def _require_inputs(paths):
    for path in paths:
        if path and not os.path.exists(path):
            raise FileNotFoundError(f"input path does not exist: {path}")


def _out_path(config, name) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


def _parse_yaw(tokens):
    steps = []
    for token in tokens:
        frame, sep, degrees = token.partition(":")
        if not sep:
            raise BadSpec(f"yaw step must look like FRAME:DEGREES, got {token!r}")
        steps.append(YawStep(int(frame), float(degrees)))
    return tuple(steps)


def _parse_incomplete(token):
    if not token:
        return None
    index, sep, fraction = token.partition(":")
    if not sep:
        raise BadSpec(f"incomplete rep must look like INDEX:FRACTION, got {token!r}")
    return (int(index), float(fraction))


def _cmd_synth(config: RunConfig) -> int:
    spec = SynthSpec(
        action_template=config.template,
        n_reps=config.reps,
        period_frames=config.period,
        noise_std=config.noise,
        camera_yaw_schedule=_parse_yaw(config.yaw),
        incomplete_rep_at=_parse_incomplete(config.incomplete),
        sub_action_at_end=config.sub_action,
        seed=config.seed,
    )
    out = synthesize(spec)
    landmark_path = _out_path(config, f"{out.video_id}.lmjsonl")
    save_landmarks(out.frames, landmark_path)
    print(f"wrote {landmark_path} frames={out.landmark_rows.shape[0]}")
    if out.annotation is not None:
        anno_path = _out_path(config, f"{out.video_id}.anno.csv")
        save_annotations([out.annotation], anno_path)
        print(f"wrote {anno_path} count={out.true_count}")
    else:
        print(f"true count 0: no annotation emitted for {out.video_id}")
    return 0


def _cmd_validate(config: RunConfig) -> int:
    _require_inputs(config.inputs)
    for path in config.inputs:
        seq = load_landmarks(path)
        print(f"OK {path} frames={len(seq.frames)}")
    return 0


def _counter(config: RunConfig) -> RepetitionCounter:
    if bool(config.model) == bool(config.rule):
        raise ValueError("set exactly one of --model or --rule")
    rule = None
    model = None
    action = config.action
    if config.rule:
        rule = template_rule(config.rule)
        action = action or config.rule
    else:
        model = load_checkpoint(config.model)
        if config.mode and FeatureMode.parse(config.mode) is not model.mode:
            raise ValueError(
                f"--mode {config.mode} conflicts with checkpoint mode {model.mode.value}"
            )
        action = action or model.action_names[0]
    return RepetitionCounter(
        rule=rule,
        model=model,
        action=action,
        side=config.side,
        upper=config.upper,
        lower=config.lower,
        smoothing_window=config.smooth,
        min_visibility=config.min_visibility,
    )


def _cmd_count(config: RunConfig) -> int:
    _require_inputs(config.inputs)
    counter = _counter(config)
    lines = ["video_id,count,final_state"]
    for path in config.inputs:
        seq = load_landmarks(path)
        density = counter.density(seq.frames, video_id=seq.video_id)
        result = counter.count(seq.frames, video_id=seq.video_id)
        atomic_write_bytes(_out_path(config, f"{seq.video_id}.density.csv"), density_csv(density))
        atomic_write_bytes(
            _out_path(config, f"{seq.video_id}.events.csv"), events_csv(result, seq.video_id)
        )
        lines.append(f"{seq.video_id},{result.count},{result.final_state.value}")
        print(f"{seq.video_id}: count={result.count}")
    counts_path = _out_path(config, "counts.csv")
    atomic_write_bytes(counts_path, ("\n".join(lines) + "\n").encode("utf-8"))
    print(f"wrote {counts_path}")
    return 0


def parse_counts_csv(data) -> list:
    """Predictions from a counts.csv (extra columns tolerated)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = [line for line in data.split("\n") if line]
    if not lines or not lines[0].startswith("video_id,count"):
        raise ParseError(1, "counts CSV must start with 'video_id,count'")
    predictions = []
    for line_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) < 2:
            raise ParseError(line_no, f"expected at least 2 columns, got {len(cells)}")
        try:
            predictions.append(Prediction(video_id=cells[0], predicted_count=int(cells[1])))
        except ValueError:
            raise ParseError(line_no, f"bad count {cells[1]!r}") from None
    return predictions


def _load_predictions(path) -> list:
    with open(path, "rb") as fh:
        return parse_counts_csv(fh.read())


def _evaluate_with_ledger(config, annotations, predictions):
    note = "none"
    if config.ledger:
        ledger = load_ledger(config.ledger)
        annotations = apply_corrections(annotations, ledger)
        note = ";".join(
            f"{e.video_id}:{e.wrong_count}->{e.corrected_count}" for e in ledger.entries
        )
    return evaluate(annotations, predictions), note


def _cmd_eval(config: RunConfig) -> int:
    _require_inputs([config.annotations, config.predictions, config.ledger])
    annotations = load_annotations(config.annotations)
    predictions = _load_predictions(config.predictions)
    report, note = _evaluate_with_ledger(config, annotations, predictions)
    report_path = _out_path(config, "report.csv")
    atomic_write_bytes(report_path, report_csv(report, corrections_note=note))
    print(
        f"n_videos={report.n_videos} mae={report.mae:.6f} obo={report.obo:.6f} "
        f"corrections={note}"
    )
    return 0


def _cmd_train(config: RunConfig) -> int:
    _require_inputs([config.annotations, *config.inputs])
    annotations = {a.video_id: a for a in load_annotations(config.annotations)}
    mode = FeatureMode.parse(config.mode)
    data = []
    for path in config.inputs:
        seq = load_landmarks(path)
        anno = annotations.get(seq.video_id)
        if anno is None:
            raise ValueError(f"no annotation row for video {seq.video_id!r}")
        by_index = {frame.frame_index: frame for frame in seq.frames}
        for label, frame_list in (
            (1.0, anno.salient_i_frames),
            (0.0, anno.salient_ii_frames),
        ):
            for frame_index in frame_list:
                if frame_index not in by_index:
                    raise ValueError(
                        f"salient frame {frame_index} not present in {seq.video_id!r}"
                    )
                row = assemble_feature_matrix([by_index[frame_index]], mode)[0]
                data.append(LabeledPose(FeatureVector(mode, row), anno.action, label))
    model = train(
        data,
        TrainConfig(
            epochs=config.epochs,
            learning_rate=config.learning_rate,
            batch_size=config.batch_size,
            seed=config.seed,
        ),
    )
    model_path = config.out or _out_path(config, "model.ckpt")
    os.makedirs(os.path.dirname(model_path) or ".", exist_ok=True)
    atomic_write_bytes(model_path, checkpoint_bytes(model))
    print(
        f"trained on {len(data)} poses, actions={list(model.action_names)}, "
        f"final_loss={model.loss_history[-1]:.6f}"
    )
    print(f"wrote {model_path}")
    return 0


def _parse_mode_path_pairs(tokens):
    pairs = []
    for token in tokens:
        mode, sep, path = token.partition("=")
        if not sep:
            raise ValueError(f"expected MODE=PATH, got {token!r}")
        pairs.append((FeatureMode.parse(mode), path))
    if len(pairs) < 2:
        raise ValueError("compare needs at least two MODE=PATH pairs")
    return pairs


def _cmd_compare(config: RunConfig) -> int:
    pairs = _parse_mode_path_pairs(config.reports)
    _require_inputs([path for _, path in pairs] + [config.annotations, config.ledger])
    reports = {}
    for mode, path in pairs:
        if config.annotations:
            annotations = load_annotations(config.annotations)
            predictions = _load_predictions(path)
            reports[mode], _ = _evaluate_with_ledger(config, annotations, predictions)
        else:
            with open(path, "rb") as fh:
                reports[mode] = parse_report_csv(fh.read())
    ranking = compare_modes(reports)
    sys.stdout.write(ranking.to_text())
    csv_path = _out_path(config, "comparison.csv")
    atomic_write_bytes(csv_path, ranking.to_csv())
    print(f"wrote {csv_path}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "validate": _cmd_validate,
    "count": _cmd_count,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
}


def run(config: RunConfig) -> int:
    """Execute one command; raises on failure (main() maps to exit codes)."""
    return _COMMANDS[config.command](config)


def load_run_config(path) -> RunConfig:
    """Reproducibility bundle: a JSON file holding RunConfig fields."""
    with open(path, "rb") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.lineno, f"bad config JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParseError(0, "config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ParseError(0, f"unknown config fields: {sorted(unknown)}")
    if "command" not in raw:
        raise ParseError(0, "config must set 'command'")
    if raw["command"] not in _COMMANDS:
        raise ParseError(0, f"unknown command {raw['command']!r}")
    for name in ("inputs", "reports", "yaw"):
        if name in raw:
            raw[name] = tuple(raw[name])
    return RunConfig(**raw)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repcount",
        description="Repetition counting from pose landmarks fused with joint angles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_flags=True):
        p.add_argument("--out-dir", default=".", help="directory for output artifacts")
        p.add_argument("--seed", type=int, default=0)
        if model_flags:
            p.add_argument("--mode", default="avg5", choices=[m.value for m in FeatureMode])

    p = sub.add_parser("synth", help="generate synthetic labeled motion")
    p.add_argument("--template", default="squat", choices=["squat", "jump_jack", "pull_up"])
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--period", type=int, default=30)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--yaw", action="append", default=[], metavar="FRAME:DEGREES")
    p.add_argument("--incomplete", default="", metavar="INDEX:FRACTION")
    p.add_argument("--sub-action", action="store_true")
    common(p, model_flags=False)

    p = sub.add_parser("validate", help="parse landmark files and report")
    p.add_argument("inputs", nargs="+", metavar="LMJSONL")
    common(p, model_flags=False)

    p = sub.add_parser("count", help="count repetitions in landmark files")
    p.add_argument("inputs", nargs="+", metavar="LMJSONL")
    p.add_argument("--model", default="", help="scorer checkpoint path")
    p.add_argument("--rule", default="", help="geometric rule template (squat|jump_jack|pull_up)")
    p.add_argument("--action", default="")
    p.add_argument("--side", default="average", choices=["left", "right", "average"])
    p.add_argument("--upper", type=float, default=0.8)
    p.add_argument("--lower", type=float, default=0.2)
    p.add_argument("--smooth", type=int, default=3)
    p.add_argument("--min-visibility", type=float, default=0.3)
    common(p)

    p = sub.add_parser("train", help="train the saliency scorer from salient-pose labels")
    p.add_argument("inputs", nargs="+", metavar="LMJSONL")
    p.add_argument("--annotations", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=0)
    p.add_argument("--out", default="", help="checkpoint path (default OUT_DIR/model.ckpt)")
    common(p)

    p = sub.add_parser("eval", help="MAE/OBO evaluation of predictions")
    p.add_argument("--annotations", required=True)
    p.add_argument("--predictions", required=True, help="counts.csv from the count command")
    p.add_argument("--ledger", default="", help="correction ledger CSV")
    common(p, model_flags=False)

    p = sub.add_parser("compare", help="rank feature modes Table-style")
    p.add_argument(
        "reports",
        nargs="+",
        metavar="MODE=PATH",
        help="per-mode report CSVs, or counts CSVs when --annotations is given",
    )
    p.add_argument("--annotations", default="")
    p.add_argument("--ledger", default="")
    common(p, model_flags=False)

    p = sub.add_parser("run", help="execute a saved RunConfig JSON bundle")
    p.add_argument("--config", required=True, help="JSON file with RunConfig fields")

    return parser


def config_from_args(args) -> RunConfig:
    fields = {
        "command": args.command,
        "out_dir": args.out_dir,
        "seed": args.seed,
    }
    for name in (
        "mode",
        "upper",
        "lower",
        "smooth",
        "model",
        "rule",
        "side",
        "action",
        "ledger",
        "annotations",
        "predictions",
        "out",
        "epochs",
        "batch_size",
        "min_visibility",
        "template",
        "reps",
        "period",
        "noise",
        "incomplete",
        "sub_action",
        "learning_rate",
    ):
        if hasattr(args, name):
            fields[name] = getattr(args, name)
    if hasattr(args, "inputs"):
        fields["inputs"] = tuple(args.inputs)
    if hasattr(args, "yaw"):
        fields["yaw"] = tuple(args.yaw)
    if args.command == "compare":
        fields["reports"] = tuple(args.reports)
    return RunConfig(**fields)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_run_config(args.config)
        else:
            config = config_from_args(args)
        return run(config)
    except (RepCountError, OSError, ValueError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
