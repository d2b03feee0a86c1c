"""CLI surface: exit codes, determinism, and the fusion-vs-raw improvement."""

import json

import pytest

from trackfuse.cli import main


def _synth_args(out, labels, **kw):
    args = ["synth", "--output", str(out), "--labels-out", str(labels),
            "--seed", "42", "--objects", "6", "--frames", "150", "--classes", "8",
            "--flicker", "0.3", "--dropout", "0.05", "--jitter", "1.0"]
    for key, value in kw.items():
        args += [f"--{key}", str(value)]
    return args


@pytest.fixture()
def detection_file(tmp_path):
    dets = tmp_path / "d.jsonl"
    labels = tmp_path / "labels.txt"
    assert main(_synth_args(dets, labels)) == 0
    return dets, labels


class TestSynth:
    def test_writes_both_files(self, detection_file):
        dets, labels = detection_file
        assert dets.exists() and labels.exists()
        assert len(labels.read_text().splitlines()) == 8
        first = json.loads(dets.read_text().splitlines()[0])
        assert set(first) >= {"seq", "frame", "bbox", "score", "probs"}

    def test_deterministic(self, tmp_path):
        a, al = tmp_path / "a.jsonl", tmp_path / "a.txt"
        b, bl = tmp_path / "b.jsonl", tmp_path / "b.txt"
        assert main(_synth_args(a, al)) == 0
        assert main(_synth_args(b, bl)) == 0
        assert a.read_bytes() == b.read_bytes()


class TestTrack:
    def test_happy_path(self, tmp_path, detection_file):
        dets, labels = detection_file
        out = tmp_path / "t.csv"
        code = main(["track", "--tracker", "sort", "--fusion", "prob",
                     "--input", str(dets), "--labels", str(labels),
                     "--output", str(out)])
        assert code == 0
        assert out.read_text().startswith("frame,track_id,")

    def test_unknown_tracker_is_usage_error(self, tmp_path, detection_file, capsys):
        dets, labels = detection_file
        code = main(["track", "--tracker", "warp-drive", "--input", str(dets),
                     "--labels", str(labels), "--output", str(tmp_path / "t.csv")])
        assert code == 1
        err = capsys.readouterr().err
        for name in ("iou", "centroid", "sort", "bytetrack", "appearance"):
            assert name in err

    def test_missing_input_is_data_error(self, tmp_path, detection_file, capsys):
        _, labels = detection_file
        code = main(["track", "--input", str(tmp_path / "absent.jsonl"),
                     "--labels", str(labels), "--output", str(tmp_path / "t.csv")])
        assert code == 2

    def test_byte_identical_reruns(self, tmp_path, detection_file):
        dets, labels = detection_file
        outputs = []
        for name in ("a", "b"):
            csv = tmp_path / f"{name}.csv"
            metrics = tmp_path / f"{name}.json"
            code = main(["track", "--tracker", "bytetrack", "--fusion", "prob",
                         "--input", str(dets), "--labels", str(labels),
                         "--output", str(csv), "--metrics-out", str(metrics)])
            assert code == 0
            outputs.append((csv.read_bytes(), metrics.read_bytes()))
        assert outputs[0] == outputs[1]

    def test_threaded_run_matches_serial(self, tmp_path, detection_file, monkeypatch):
        dets, labels = detection_file
        # Two sequences: run the same file under two names.
        double = tmp_path / "double.jsonl"
        lines = dets.read_text().splitlines()
        with double.open("w") as fh:
            for line in lines:
                fh.write(line + "\n")
            for line in lines:
                rec = json.loads(line)
                rec["seq"] = "other"
                fh.write(json.dumps(rec) + "\n")
        got = {}
        for threads in ("1", "4"):
            monkeypatch.setenv("TRACKFUSE_THREADS", threads)
            out = tmp_path / f"t{threads}.csv"
            assert main(["track", "--input", str(double), "--labels", str(labels),
                         "--output", str(out)]) == 0
            got[threads] = out.read_bytes()
        assert got["1"] == got["4"]

    def test_config_file_with_cli_override(self, tmp_path, detection_file):
        dets, labels = detection_file
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"min_hits": 2, "max_age": 5}))
        out = tmp_path / "t.csv"
        code = main(["track", "--input", str(dets), "--labels", str(labels),
                     "--output", str(out), "--config", str(cfg), "--max-age", "9"])
        assert code == 0

    def test_unknown_config_field_is_data_error(self, tmp_path, detection_file, capsys):
        dets, labels = detection_file
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"min_hitz": 2}))
        code = main(["track", "--input", str(dets), "--labels", str(labels),
                     "--output", str(tmp_path / "t.csv"), "--config", str(cfg)])
        assert code == 2
        assert "min_hitz" in capsys.readouterr().err


class TestEval:
    def test_fusion_beats_raw_on_flickered_data(self, tmp_path, detection_file):
        dets, labels = detection_file
        reports = {}
        for mode in ("none", "prob"):
            out = tmp_path / f"{mode}.json"
            code = main(["eval", "--input", str(dets), "--labels", str(labels),
                         "--tracker", "sort", "--fusion", mode,
                         "--json-out", str(out)])
            assert code == 0
            reports[mode] = json.loads(out.read_text())
        assert reports["none"]["fused"]["acc1"] == reports["none"]["raw"]["acc1"]
        assert reports["prob"]["fused"]["acc1"] > reports["none"]["fused"]["acc1"]

    def test_report_fields(self, tmp_path, detection_file, capsys):
        dets, labels = detection_file
        out = tmp_path / "r.json"
        code = main(["eval", "--input", str(dets), "--labels", str(labels),
                     "--per-class", "--flip-rate", "--json-out", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        assert set(report) >= {"raw", "fused", "flip_rate", "per_class",
                               "n_evaluated", "n_matched"}
        assert report["flip_rate"]["fused"] == 0.0
        assert len(report["per_class"]) == 8
        text = capsys.readouterr().out
        assert "Acc@1" in text and "flip rate" in text

    def test_no_ground_truth_is_data_error(self, tmp_path, detection_file, capsys):
        dets, labels = detection_file
        stripped = tmp_path / "nogt.jsonl"
        with stripped.open("w") as fh:
            for line in dets.read_text().splitlines():
                rec = json.loads(line)
                rec.pop("gt_class", None)
                rec.pop("gt_track", None)
                fh.write(json.dumps(rec) + "\n")
        code = main(["eval", "--input", str(stripped), "--labels", str(labels)])
        assert code == 2


class TestSimulate:
    def test_burst_sampling_thins_frames(self, tmp_path, detection_file):
        dets, _ = detection_file
        out = tmp_path / "sim.jsonl"
        code = main(["simulate", "--input", str(dets), "--output", str(out),
                     "--fps", "10", "--burst", "4", "--cooldown", "5"])
        assert code == 0
        frames = sorted({json.loads(line)["frame"] for line in out.read_text().splitlines()})
        # Triggers at 0, 50, 100 (cooldown 50 frames), four frames 10 apart each.
        assert frames == [0, 10, 20, 30, 50, 60, 70, 80, 100, 110, 120, 130]

    def test_burst_split_makes_one_sequence_per_burst(self, tmp_path, detection_file):
        dets, _ = detection_file
        out = tmp_path / "sim.jsonl"
        assert main(["simulate", "--input", str(dets), "--output", str(out),
                     "--fps", "10", "--burst", "4", "--cooldown", "5"]) == 0
        seqs = {json.loads(line)["seq"] for line in out.read_text().splitlines()}
        assert seqs == {"synth-000#b0000", "synth-000#b0001", "synth-000#b0002"}

    def test_track_across_bursts_keeps_sequence(self, tmp_path, detection_file):
        dets, _ = detection_file
        out = tmp_path / "sim.jsonl"
        assert main(["simulate", "--input", str(dets), "--output", str(out),
                     "--fps", "10", "--burst", "4", "--cooldown", "5",
                     "--track-across-bursts"]) == 0
        seqs = {json.loads(line)["seq"] for line in out.read_text().splitlines()}
        assert seqs == {"synth-000"}

    def test_sampled_output_still_tracks(self, tmp_path, detection_file):
        dets, labels = detection_file
        sim = tmp_path / "sim.jsonl"
        assert main(["simulate", "--input", str(dets), "--output", str(sim),
                     "--fps", "10", "--burst", "4", "--cooldown", "5"]) == 0
        out = tmp_path / "t.csv"
        assert main(["track", "--input", str(sim), "--labels", str(labels),
                     "--output", str(out)]) == 0
        assert len(out.read_text().splitlines()) > 1


class TestBench:
    def test_prints_table_and_writes_json(self, tmp_path, detection_file, capsys):
        dets, labels = detection_file
        out = tmp_path / "bench.json"
        code = main(["bench", "--input", str(dets), "--labels", str(labels),
                     "--trackers", "iou,centroid,appearance",
                     "--json-out", str(out)])
        assert code == 0
        text = capsys.readouterr().out
        assert "MOT" in text and "ReID" in text
        payload = json.loads(out.read_text())
        assert set(payload) == {"iou", "centroid", "appearance"}
        for block in payload.values():
            assert block["samples"] == 150

    def test_unknown_tracker_name(self, tmp_path, detection_file):
        dets, labels = detection_file
        code = main(["bench", "--input", str(dets), "--labels", str(labels),
                     "--trackers", "iou,quantum"])
        assert code == 2


class TestUsage:
    def test_no_command(self, capsys):
        assert main([]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
