import json
import os
import subprocess
import sys

import pytest

from repcount.cli import main, parse_counts_csv
from repcount.errors import ParseError
from repcount.metrics import parse_report_csv


def run_cli(args, capsys=None):
    return main(list(args))


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture
def synth_squat(tmp_path):
    out_dir = tmp_path / "synth"
    code = run_cli(
        ["synth", "--template", "squat", "--reps", "3", "--period", "30", "--out-dir", str(out_dir)]
    )
    assert code == 0
    lm = out_dir / "squat-3x30-s0.lmjsonl"
    anno = out_dir / "squat-3x30-s0.anno.csv"
    assert lm.exists() and anno.exists()
    return lm, anno


class TestSynthCountEval:
    def test_end_to_end_self_consistency(self, tmp_path, synth_squat, capsys):
        lm, anno = synth_squat
        count_dir = tmp_path / "counts"
        assert run_cli(["count", str(lm), "--rule", "squat", "--out-dir", str(count_dir)]) == 0
        counts = read(count_dir / "counts.csv").decode()
        assert "squat-3x30-s0,3,SEEN_I" in counts
        assert (count_dir / "squat-3x30-s0.density.csv").exists()
        assert (count_dir / "squat-3x30-s0.events.csv").exists()

        eval_dir = tmp_path / "eval"
        code = run_cli(
            [
                "eval",
                "--annotations",
                str(anno),
                "--predictions",
                str(count_dir / "counts.csv"),
                "--out-dir",
                str(eval_dir),
            ]
        )
        assert code == 0
        report = parse_report_csv(read(eval_dir / "report.csv"))
        assert report.mae == 0.0 and report.obo == 1.0
        out = capsys.readouterr().out
        assert "mae=0.000000" in out

    def test_outputs_byte_identical_across_runs(self, tmp_path):
        args = ["synth", "--template", "pull_up", "--reps", "2", "--period", "12", "--seed", "5"]
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        assert run_cli(args + ["--out-dir", str(dir_a)]) == 0
        assert run_cli(args + ["--out-dir", str(dir_b)]) == 0
        name = "pull_up-2x12-s5.lmjsonl"
        assert read(dir_a / name) == read(dir_b / name)

        count_a = tmp_path / "ca"
        count_b = tmp_path / "cb"
        for src, dst in ((dir_a, count_a), (dir_b, count_b)):
            assert run_cli(
                ["count", str(src / name), "--rule", "pull_up", "--out-dir", str(dst)]
            ) == 0
        assert read(count_a / "counts.csv") == read(count_b / "counts.csv")
        assert read(count_a / "pull_up-2x12-s5.density.csv") == read(
            count_b / "pull_up-2x12-s5.density.csv"
        )

    def test_count_requires_exactly_one_scorer(self, synth_squat):
        lm, _ = synth_squat
        assert run_cli(["count", str(lm)]) == 2
        assert run_cli(["count", str(lm), "--rule", "squat", "--model", "x.ckpt"]) == 2


class TestValidate:
    def test_ok_file(self, synth_squat, capsys):
        lm, _ = synth_squat
        assert run_cli(["validate", str(lm)]) == 0
        assert "OK" in capsys.readouterr().out

    def test_truncated_file_exits_2_with_line(self, tmp_path, synth_squat, capsys):
        lm, _ = synth_squat
        data = read(lm).decode().split("\n")
        broken = tmp_path / "broken.lmjsonl"
        broken.write_text("\n".join(data[:2]) + "\n" + data[2][: len(data[2]) // 2] + "\n")
        code = run_cli(["validate", str(broken)])
        assert code == 2
        record = json.loads(capsys.readouterr().err.strip())
        assert record["error"] in ("ParseError", "WrongLandmarkCount")
        assert record["line"] == 3

    def test_missing_file(self, capsys):
        assert run_cli(["validate", "no-such-file.lmjsonl"]) == 2


class TestTrainCommand:
    def test_train_then_count_with_model(self, tmp_path, capsys):
        synth_dir = tmp_path / "data"
        for seed in (0, 1):
            assert run_cli(
                [
                    "synth",
                    "--template",
                    "squat",
                    "--reps",
                    "4",
                    "--period",
                    "20",
                    "--noise",
                    "0.005",
                    "--seed",
                    str(seed),
                    "--out-dir",
                    str(synth_dir),
                ]
            ) == 0
        files = sorted(str(p) for p in synth_dir.glob("*.lmjsonl"))
        annos = sorted(synth_dir.glob("*.anno.csv"))
        merged = synth_dir / "annotations.csv"
        header, *_ = annos[0].read_text().split("\n")
        rows = []
        for path in annos:
            rows.extend(line for line in path.read_text().split("\n")[1:] if line)
        merged.write_text(header + "\n" + "\n".join(rows) + "\n")

        model_path = tmp_path / "model.ckpt"
        code = run_cli(
            [
                "train",
                *files,
                "--annotations",
                str(merged),
                "--mode",
                "avg5",
                "--epochs",
                "200",
                "--learning-rate",
                "0.5",
                "--out",
                str(model_path),
            ]
        )
        assert code == 0
        assert model_path.exists()

        count_dir = tmp_path / "model-counts"
        code = run_cli(
            [
                "count",
                files[0],
                "--model",
                str(model_path),
                "--action",
                "squat",
                "--out-dir",
                str(count_dir),
            ]
        )
        assert code == 0
        counts = read(count_dir / "counts.csv").decode()
        row = [line for line in counts.split("\n") if line.startswith("squat-4x20-s0")][0]
        assert int(row.split(",")[1]) == 4

    def test_mode_conflict_with_checkpoint(self, tmp_path, synth_squat):
        lm, anno = synth_squat
        model_path = tmp_path / "m.ckpt"
        assert run_cli(
            [
                "train",
                str(lm),
                "--annotations",
                str(anno),
                "--mode",
                "left5",
                "--epochs",
                "2",
                "--out",
                str(model_path),
            ]
        ) == 0
        assert run_cli(["count", str(lm), "--model", str(model_path), "--mode", "avg5"]) == 2

    def test_training_failure_exit_code(self, tmp_path, synth_squat, capsys):
        lm, anno = synth_squat
        # blow up the learning rate so the loss goes non-finite
        code = run_cli(
            [
                "train",
                str(lm),
                "--annotations",
                str(anno),
                "--epochs",
                "40",
                "--learning-rate",
                "1e160",
                "--out",
                str(tmp_path / "m.ckpt"),
            ]
        )
        assert code == 4
        record = json.loads(capsys.readouterr().err.strip())
        assert record["error"] == "NonFiniteLoss"


class TestEvalErrors:
    def test_missing_prediction_exits_3(self, tmp_path, synth_squat, capsys):
        _, anno = synth_squat
        counts = tmp_path / "counts.csv"
        counts.write_text("video_id,count\nother,3\n")
        code = run_cli(
            ["eval", "--annotations", str(anno), "--predictions", str(counts), "--out-dir", str(tmp_path)]
        )
        assert code == 3
        assert json.loads(capsys.readouterr().err.strip())["error"] == "MissingPrediction"

    def test_ledger_applied_and_stale_rejected(self, tmp_path, capsys):
        anno = tmp_path / "a.csv"
        anno.write_text("video_id,count,action\nstu4_5,51,pull_up\n")
        counts = tmp_path / "c.csv"
        counts.write_text("video_id,count\nstu4_5,5\n")
        ledger = tmp_path / "ledger.csv"
        ledger.write_text("video_id,wrong,corrected,reason\nstu4_5,51,5,mislabeled\n")
        out_dir = tmp_path / "out"
        code = run_cli(
            [
                "eval",
                "--annotations",
                str(anno),
                "--predictions",
                str(counts),
                "--ledger",
                str(ledger),
                "--out-dir",
                str(out_dir),
            ]
        )
        assert code == 0
        report_blob = read(out_dir / "report.csv").decode()
        assert "stu4_5,5,5,0.000000,true" in report_blob
        assert "corrections=stu4_5:51->5" in report_blob

        stale_anno = tmp_path / "fixed.csv"
        stale_anno.write_text("video_id,count,action\nstu4_5,5,pull_up\n")
        code = run_cli(
            [
                "eval",
                "--annotations",
                str(stale_anno),
                "--predictions",
                str(counts),
                "--ledger",
                str(ledger),
                "--out-dir",
                str(out_dir),
            ]
        )
        assert code == 3
        assert json.loads(capsys.readouterr().err.strip())["error"] == "StaleCorrection"


class TestCompare:
    def _fixture_report(self, path, mae, obo):
        path.write_bytes(
            b"video_id,gt,pred,norm_err,within_one\n"
            + f"# summary n_videos=100 mae={mae:.6f} obo={obo:.6f}\n".encode()
        )

    def test_fixture_reports_ranked(self, tmp_path, capsys):
        reports = {
            "landmarks": (0.236, 0.559),
            "left5": (0.227, 0.571),
            "lr10": (0.213, 0.587),
            "avg5": (0.211, 0.599),
        }
        args = ["compare", "--out-dir", str(tmp_path)]
        for mode, (mae, obo) in reports.items():
            path = tmp_path / f"{mode}.csv"
            self._fixture_report(path, mae, obo)
            args.append(f"{mode}={path}")
        assert run_cli(args) == 0
        out = capsys.readouterr().out
        lines = [line for line in out.split("\n") if line and not line.startswith("wrote")]
        assert lines[1].split()[1] == "avg5"
        assert lines[2].split()[1] == "lr10"
        assert lines[3].split()[1] == "left5"
        assert lines[4].split()[1] == "landmarks"
        csv_blob = read(tmp_path / "comparison.csv").decode()
        assert csv_blob.splitlines()[1].startswith("1,avg5,0.211000,0.599000")

    def test_compare_needs_two(self, tmp_path):
        path = tmp_path / "one.csv"
        self._fixture_report(path, 0.2, 0.5)
        assert run_cli(["compare", f"avg5={path}", "--out-dir", str(tmp_path)]) == 2

    def test_compare_from_predictions(self, tmp_path, synth_squat):
        lm, anno = synth_squat
        good = tmp_path / "good.csv"
        good.write_text("video_id,count\nsquat-3x30-s0,3\n")
        bad = tmp_path / "bad.csv"
        bad.write_text("video_id,count\nsquat-3x30-s0,9\n")
        code = run_cli(
            [
                "compare",
                f"avg5={good}",
                f"landmarks={bad}",
                "--annotations",
                str(anno),
                "--out-dir",
                str(tmp_path),
            ]
        )
        assert code == 0
        csv_blob = read(tmp_path / "comparison.csv").decode()
        assert csv_blob.splitlines()[1].startswith("1,avg5,0.000000")


class TestCountsCsv:
    def test_parse_counts(self):
        preds = parse_counts_csv("video_id,count,final_state\nv1,3,NEUTRAL\nv2,0,SEEN_I\n")
        assert [(p.video_id, p.predicted_count) for p in preds] == [("v1", 3), ("v2", 0)]

    def test_bad_header(self):
        with pytest.raises(ParseError):
            parse_counts_csv("nope\n")

    def test_bad_count_value(self):
        with pytest.raises(ParseError):
            parse_counts_csv("video_id,count\nv,x\n")


class TestRunConfigBundle:
    def test_bundle_reproduces_flag_run(self, tmp_path):
        flag_dir = tmp_path / "flags"
        assert run_cli(["synth", "--reps", "2", "--period", "10", "--out-dir", str(flag_dir)]) == 0

        bundle = tmp_path / "bundle.json"
        bundle.write_text(
            json.dumps(
                {
                    "command": "synth",
                    "template": "squat",
                    "reps": 2,
                    "period": 10,
                    "out_dir": str(tmp_path / "bundled"),
                }
            )
        )
        assert run_cli(["run", "--config", str(bundle)]) == 0
        name = "squat-2x10-s0.lmjsonl"
        assert read(flag_dir / name) == read(tmp_path / "bundled" / name)

    def test_unknown_field_rejected(self, tmp_path, capsys):
        bundle = tmp_path / "bad.json"
        bundle.write_text(json.dumps({"command": "synth", "bogus": 1}))
        assert run_cli(["run", "--config", str(bundle)]) == 2
        assert json.loads(capsys.readouterr().err.strip())["error"] == "ParseError"

    def test_missing_command_rejected(self, tmp_path):
        bundle = tmp_path / "bad.json"
        bundle.write_text(json.dumps({"reps": 2}))
        assert run_cli(["run", "--config", str(bundle)]) == 2


class TestConsoleScript:
    def test_module_entrypoint(self, tmp_path):
        env = dict(os.environ)
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "repcount.cli",
                "synth",
                "--reps",
                "1",
                "--period",
                "8",
                "--out-dir",
                str(tmp_path),
            ],
            capture_output=True,
            text=True,
            env=env,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "squat-1x8-s0.lmjsonl").exists()
