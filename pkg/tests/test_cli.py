import json

import pytest

from fitseq.cli import main
from fitseq.features import feature_column_names
from fitseq.landmarks import write_landmark_csv
from fitseq.synthetic import make_dataset, make_session


@pytest.fixture(scope="module")
def raw_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "raw.csv"
    write_landmark_csv(make_dataset(windows_per_class=6, seed=21), path)
    return path


@pytest.fixture(scope="module")
def squat_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "squat.csv"
    write_landmark_csv(make_session("squat", 180, 3, seed=2, noise_std=0.002), path)
    return path


@pytest.fixture(scope="module")
def feat_csv(raw_csv, tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "features.csv"
    assert main(["featurize", str(raw_csv), "--layout", "mixed78", "-o", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def train_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "train.cfg"
    path.write_text(
        "units = 8\nepochs = 5\nbatch_size = 16\nlearning_rate = 0.01\n"
        "dropout_rate = 0.0\n# comment line\n"
    )
    return path


@pytest.fixture(scope="module")
def model_file(feat_csv, train_config, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.fsm"
    code = main([
        "train", str(feat_csv), "--arch", "bilstm", "--config", str(train_config),
        "--seed", "3", "-o", str(path),
    ])
    assert code == 0
    return path


class TestFeaturize:
    def test_output_schema(self, feat_csv):
        header = feat_csv.read_text().splitlines()[0].split(",")
        assert tuple(header) == ("video_id", "label") + feature_column_names("mixed78")

    def test_row_count_matches_usable_frames(self, feat_csv):
        rows = feat_csv.read_text().splitlines()
        assert len(rows) - 1 == 6 * 4 * 30      # windows/class * classes * frames


class TestTrainEvaluate:
    def test_model_written(self, model_file):
        assert model_file.exists() and model_file.stat().st_size > 0

    def test_evaluate_writes_three_reports(self, model_file, feat_csv, tmp_path):
        outdir = tmp_path / "reports"
        code = main(["evaluate", str(model_file), str(feat_csv), "--report", str(outdir)])
        assert code == 0
        for name in ("report.csv", "confusion.csv", "report.txt"):
            assert (outdir / name).exists()
        text = (outdir / "report.txt").read_text()
        assert "accuracy" in text


class TestSearch:
    def test_single_iteration_ledger(self, feat_csv, tmp_path):
        ledger = tmp_path / "ledger.csv"
        code = main([
            "search", str(feat_csv), "--arch", "lstm", "--iters", "1",
            "--seed", "5", "-o", str(ledger),
        ])
        assert code == 0
        lines = ledger.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("trial,units,dropout_rate")


class TestCount:
    def test_count_squat_session(self, squat_csv, capsys, tmp_path):
        events = tmp_path / "events.csv"
        code = main([
            "count", str(squat_csv), "--exercise", "squat", "-o", str(events),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "squat: 3 repetitions" in out
        assert len(events.read_text().splitlines()) == 4    # header + 3 events

    def test_threshold_override_file(self, squat_csv, tmp_path, capsys):
        cfg = tmp_path / "thresholds.cfg"
        # impossible band: down threshold below any generated angle
        cfg.write_text("squat.enter_down = 5\n")
        code = main([
            "count", str(squat_csv), "--exercise", "squat", "--thresholds", str(cfg),
        ])
        assert code == 0
        assert "squat: 0 repetitions" in capsys.readouterr().out


class TestStream:
    def test_jsonl_events_and_cadence(self, model_file, squat_csv, capsys):
        code = main([
            "stream", str(squat_csv), "--model", str(model_file), "--no-throttle",
        ])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        records = [json.loads(line) for line in lines]
        kinds = [r["kind"] for r in records]
        assert kinds.count("classified") == 180 // 30
        assert all(r["kind"] in ("classified", "rep", "skipped_frame") for r in records)


class TestStreamStdin:
    def test_data_rows_on_stdin(self, model_file, squat_csv, tmp_path):
        import subprocess
        import sys

        rows = squat_csv.read_text().splitlines()[1:]       # no header on stdin
        proc = subprocess.run(
            [sys.executable, "-m", "fitseq", "stream", "-",
             "--model", str(model_file), "--no-throttle"],
            input="\n".join(rows) + "\n", text=True, capture_output=True,
        )
        assert proc.returncode == 0
        records = [json.loads(line) for line in proc.stdout.strip().splitlines()]
        assert sum(r["kind"] == "classified" for r in records) == len(rows) // 30


class TestExitCodes:
    def test_missing_input_file(self, tmp_path):
        assert main(["featurize", str(tmp_path / "nope.csv"), "-o", str(tmp_path / "o.csv")]) == 3

    def test_malformed_csv_is_input_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,landmark,file\n1,2,3,4\n")
        assert main(["count", str(bad), "--exercise", "squat"]) == 3

    def test_corrupt_model_is_model_error(self, tmp_path, squat_csv):
        fake = tmp_path / "fake.fsm"
        fake.write_bytes(b"garbage")
        assert main(["stream", str(squat_csv), "--model", str(fake), "--no-throttle"]) == 4

    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["count", "somefile.csv"])          # missing required --exercise
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["transmogrify"])
        assert exc.value.code == 2
