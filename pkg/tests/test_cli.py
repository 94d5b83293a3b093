import json

import numpy as np
import pytest

from zeroline.cli import main
from zeroline.detection import Detection, load_detections
from zeroline.geometry import BBox, Homography
from zeroline.imagecore import GrayImage, Point2, load_pgm, save_pgm
from zeroline.session import Session, ClickConfig, save_session
from zeroline.synthgen import load_ground_truth
from zeroline.tracking import IterationRecord


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One generated sequence plus a session tracked over both images."""
    ws = tmp_path_factory.mktemp("cli")
    data = ws / "data"
    code = main(
        ["synth", "--seed", "6", "--sequences", "1", "--out", str(data), "--size", "400"]
    )
    assert code == 0

    session = ws / "session.json"
    template = data / "template.pgm"
    code = main(
        ["track", "--new", "--session", str(session), "--template", str(template),
         "--image", str(data / "seq_001" / "iter_1.pgm")]
    )
    assert code == 0
    code = main(
        ["track", "--session", str(session), "--template", str(template),
         "--image", str(data / "seq_001" / "iter_2.pgm")]
    )
    assert code == 0
    return ws


def identity_flat():
    return Homography.identity()


def perfect_session(truth, image_files):
    """A prediction session whose detections are the ground truth itself."""
    session = Session(
        session_id="oracle",
        template_ref="template.pgm",
        distance_m=25.0,
        click_config=ClickConfig(),
        aim_point=Point2(200.0, 200.0),
    )
    for k, file in enumerate(image_files, start=1):
        visible = truth.holes_through(k)
        dets = [Detection(h.bbox, 1.0) for h in visible]
        fresh = [i for i, h in enumerate(visible) if h.iteration == k]
        session.iterations.append(
            IterationRecord(
                index=k,
                image_ref=file,
                detections=dets,
                new_hole_indices=fresh,
                homography=identity_flat(),
            )
        )
    return session


class TestSynth:
    def test_writes_template_and_sequences(self, workspace):
        data = workspace / "data"
        assert (data / "template.pgm").exists()
        assert (data / "template.json").exists()
        for name in ("iter_1.pgm", "iter_2.pgm", "truth.json"):
            assert (data / "seq_001" / name).exists()

    def test_deterministic_output(self, tmp_path):
        args = ["synth", "--seed", "9", "--sequences", "1", "--size", "400"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for rel in ("seq_001/truth.json", "seq_001/iter_1.pgm", "template.pgm"):
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_rejects_empty_hole_range(self, tmp_path):
        code = main(
            ["synth", "--holes-min", "5", "--holes-max", "4", "--out", str(tmp_path / "x")]
        )
        assert code == 3


class TestSegment:
    def test_writes_normalized_image(self, workspace, tmp_path, capsys):
        data = workspace / "data"
        out = tmp_path / "norm.pgm"
        code = main(
            ["segment", "--image", str(data / "seq_001" / "iter_1.pgm"),
             "--template", str(data / "template.pgm"), "--out", str(out)]
        )
        assert code == 0
        assert "inliers" in capsys.readouterr().out
        normalized = load_pgm(out)
        assert normalized.width == 400
        assert normalized.height == 400

    def test_json_output(self, workspace, capsys):
        data = workspace / "data"
        code = main(
            ["segment", "--image", str(data / "seq_001" / "iter_1.pgm"),
             "--template", str(data / "template.pgm"), "--json"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["homography"]) == 9
        assert doc["inlier_count"] > 0
        assert doc["used_fallback"] is False

    def test_missing_image_is_io_error(self, workspace):
        data = workspace / "data"
        code = main(
            ["segment", "--image", str(data / "nope.pgm"),
             "--template", str(data / "template.pgm")]
        )
        assert code == 4


class TestDetect:
    def test_detection_file_round_trip(self, workspace, tmp_path, capsys):
        data = workspace / "data"
        out = tmp_path / "dets.json"
        code = main(
            ["detect", "--image", str(data / "seq_001" / "iter_1.pgm"),
             "--template", str(data / "template.pgm"),
             "--detections-out", str(out), "--json"]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc == json.loads(capsys.readouterr().out)
        assert doc["frame"] == "normalized"

        truth = load_ground_truth(data / "seq_001" / "truth.json")
        dets = load_detections(doc)
        assert len(dets) == len(truth.holes_through(1))


class TestTrack:
    def test_session_accumulates_iterations(self, workspace):
        doc = json.loads((workspace / "session.json").read_text())
        assert [r["index"] for r in doc["iterations"]] == [1, 2]
        assert doc["iterations"][0]["group_stats"] is not None
        assert doc["iterations"][0]["adjustment"] is not None

    def test_new_hole_counts_match_truth(self, workspace):
        truth = load_ground_truth(workspace / "data" / "seq_001" / "truth.json")
        doc = json.loads((workspace / "session.json").read_text())
        for k, entry in enumerate(doc["iterations"], start=1):
            fresh = sum(1 for h in truth.holes if h.iteration == k)
            assert len(entry["new_hole_indices"]) == fresh

    def test_reports_new_holes_and_scores(self, workspace, tmp_path, capsys):
        data = workspace / "data"
        session = tmp_path / "s.json"
        code = main(
            ["track", "--new", "--session", str(session),
             "--template", str(data / "template.pgm"),
             "--image", str(data / "seq_001" / "iter_1.pgm"),
             "--annotate", str(tmp_path / "marked.pgm")]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "iteration 1:" in out
        assert "new holes:" in out
        assert "windage:" in out
        marked = load_pgm(tmp_path / "marked.pgm")
        assert marked.width == 400

    def test_unregisterable_image_exits_two(self, workspace, tmp_path):
        noise = GrayImage(
            np.random.default_rng(1).integers(0, 256, size=(400, 400)).astype(np.uint8)
        )
        noise_path = tmp_path / "noise.pgm"
        save_pgm(noise, noise_path)
        code = main(
            ["track", "--new", "--session", str(tmp_path / "s.json"),
             "--template", str(workspace / "data" / "template.pgm"),
             "--image", str(noise_path)]
        )
        assert code == 2

    def test_missing_session_is_io_error(self, workspace):
        data = workspace / "data"
        code = main(
            ["track", "--session", str(workspace / "missing.json"),
             "--template", str(data / "template.pgm"),
             "--image", str(data / "seq_001" / "iter_1.pgm")]
        )
        assert code == 4


class TestScore:
    def test_defaults_to_last_iteration(self, workspace, capsys):
        code = main(["score", "--session", str(workspace / "session.json")])
        assert code == 0
        assert "iteration 2" in capsys.readouterr().out

    def test_json_matches_session_record(self, workspace, capsys):
        code = main(
            ["score", "--session", str(workspace / "session.json"),
             "--iteration", "1", "--json"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        stored = json.loads((workspace / "session.json").read_text())
        assert doc == stored["iterations"][0]

    def test_out_of_range_iteration(self, workspace):
        code = main(
            ["score", "--session", str(workspace / "session.json"), "--iteration", "9"]
        )
        assert code == 3


@pytest.fixture(scope="module")
def oracle_eval(tmp_path_factory):
    """Two sequences evaluated against predictions copied from the truth."""
    root = tmp_path_factory.mktemp("oracle")
    data = root / "truth"
    code = main(
        ["synth", "--seed", "31", "--sequences", "2", "--out", str(data), "--size", "400"]
    )
    assert code == 0
    pred = root / "pred"
    for seq_dir in sorted(d for d in data.iterdir() if d.is_dir()):
        truth = load_ground_truth(seq_dir / "truth.json")
        files = [m.file for m in truth.images]
        session = perfect_session(truth, files)
        (pred / seq_dir.name).mkdir(parents=True)
        save_session(session, pred / seq_dir.name / "session.json")
    return root


class TestEval:
    def test_oracle_predictions_score_ones(self, oracle_eval, capsys):
        report_path = oracle_eval / "out" / "report.json"
        code = main(
            ["eval", "--pred", str(oracle_eval / "pred"),
             "--truth", str(oracle_eval / "truth"),
             "--report", str(report_path), "--json"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc == json.loads(report_path.read_text())
        assert doc["map50"] == 1.0
        assert doc["map50_95"] == 1.0
        assert doc["jaccard_mean"] == 1.0
        assert doc["iteration_classification_accuracy"] == 1.0
        assert doc["segmentation_accuracy"] == 1.0
        assert doc["full_pipeline_accuracy"] == 1.0
        assert doc["counts"]["images"] == 4
        assert doc["counts"]["targets"] == 2

    def test_report_files_written(self, oracle_eval):
        out = oracle_eval / "out"
        assert (out / "report.csv").exists()
        assert (out / "report_ap_vs_threshold.png").exists()
        assert (out / "report_pr_curve.png").exists()
        header = (out / "report.csv").read_text().splitlines()[0]
        assert header == "metric,threshold,value"

    def test_no_figures_flag(self, oracle_eval):
        report_path = oracle_eval / "bare" / "report.json"
        code = main(
            ["eval", "--pred", str(oracle_eval / "pred"),
             "--truth", str(oracle_eval / "truth"),
             "--report", str(report_path), "--no-figures"]
        )
        assert code == 0
        assert not list((oracle_eval / "bare").glob("*.png"))

    def test_missing_prediction_session(self, oracle_eval, tmp_path):
        code = main(
            ["eval", "--pred", str(tmp_path), "--truth", str(oracle_eval / "truth"),
             "--report", str(tmp_path / "r.json")]
        )
        assert code == 3

    def test_truth_without_sequences(self, tmp_path):
        code = main(
            ["eval", "--pred", str(tmp_path), "--truth", str(tmp_path),
             "--report", str(tmp_path / "r.json")]
        )
        assert code == 3

    def test_hand_computed_map_case(self, tmp_path, capsys):
        # one image, two truth holes, detections ranked hit-miss-hit:
        # the pooled map50 must equal the single-image 0.8333 value
        truth_doc = {
            "template": "template.pgm",
            "canonical_size": 400,
            "mm_per_pixel": 0.5,
            "images": [
                {"iteration": 1, "file": "iter_1.pgm",
                 "homography_canonical_to_raw": [1, 0, 0, 0, 1, 0, 0, 0, 1]}
            ],
            "holes": [
                {"bbox": [100, 100, 112, 112], "iteration": 1},
                {"bbox": [200, 200, 212, 212], "iteration": 1},
            ],
        }
        seq = tmp_path / "truth" / "seq_001"
        seq.mkdir(parents=True)
        (seq / "truth.json").write_text(json.dumps(truth_doc))

        session = Session(
            session_id="crafted",
            template_ref="template.pgm",
            distance_m=25.0,
            click_config=ClickConfig(),
            aim_point=Point2(200.0, 200.0),
        )
        session.iterations.append(
            IterationRecord(
                index=1,
                image_ref="iter_1.pgm",
                detections=[
                    Detection(BBox(100, 100, 112, 112), 0.9),
                    Detection(BBox(300, 300, 312, 312), 0.8),
                    Detection(BBox(200, 200, 212, 212), 0.7),
                ],
                new_hole_indices=[0, 1, 2],
                homography=identity_flat(),
            )
        )
        pred = tmp_path / "pred" / "seq_001"
        pred.mkdir(parents=True)
        save_session(session, pred / "session.json")

        code = main(
            ["eval", "--pred", str(tmp_path / "pred"), "--truth", str(tmp_path / "truth"),
             "--report", str(tmp_path / "report.json"), "--no-figures", "--json"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["map50"] == pytest.approx(0.8333, abs=1e-4)
        # three detections against two holes can never match the count
        assert doc["full_pipeline_accuracy"] == 0.0


class TestUsageErrors:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as err:
            main(["warp"])
        assert err.value.code == 3

    def test_missing_required_argument(self):
        with pytest.raises(SystemExit) as err:
            main(["segment", "--image", "x.pgm"])
        assert err.value.code == 3

    def test_malformed_thresholds(self, oracle_eval):
        code = main(
            ["eval", "--pred", str(oracle_eval / "pred"),
             "--truth", str(oracle_eval / "truth"),
             "--report", str(oracle_eval / "t" / "r.json"), "--thresholds", "abc"]
        )
        assert code == 3
