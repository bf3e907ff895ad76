import json

import pytest

from boxmatch.annotations import AnnotationError, load_annotations, load_detections
from boxmatch.cli import main

# this box produces per-object counts (6, 3) under the default grid and
# thresholds - the 13-anchor worked example realized in annotation form
BOAT_BBOX = [61, 90, 40, 72]


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def annotation_file(tmp_path):
    return write_json(
        tmp_path / "gt.json",
        {
            "images": [
                {"id": 1, "width": 320, "height": 320},
                {"id": 2, "width": 320, "height": 320},
            ],
            "annotations": [
                {"image_id": 1, "bbox": BOAT_BBOX, "category_id": 1},
                {"image_id": 1, "bbox": [200, 40, 80, 60], "category_id": 2},
            ],
            "categories": [{"id": 1, "name": "boat"}, {"id": 2, "name": "car"}],
        },
    )


class TestAnnotations:
    def test_load_and_convert(self, annotation_file):
        images, categories = load_annotations(annotation_file)
        assert [img.image_id for img in images] == [1, 2]
        box = images[0].boxes[0]
        assert (box.x_min, box.y_min, box.x_max, box.y_max) == (61, 90, 101, 162)
        assert images[0].class_ids == [1, 2]
        assert images[1].boxes == []
        assert categories == {1: "boat", 2: "car"}

    def test_bad_bbox_names_record(self, tmp_path):
        path = write_json(
            tmp_path / "bad.json",
            {
                "images": [{"id": 1, "width": 320, "height": 320}],
                "annotations": [{"image_id": 1, "bbox": [10, 10, -5, 20], "category_id": 1}],
            },
        )
        with pytest.raises(AnnotationError, match=r"annotations\[0\]"):
            load_annotations(path)

    def test_unknown_image_in_annotation(self, tmp_path):
        path = write_json(
            tmp_path / "bad.json",
            {
                "images": [{"id": 1, "width": 320, "height": 320}],
                "annotations": [{"image_id": 9, "bbox": [1, 1, 5, 5], "category_id": 1}],
            },
        )
        with pytest.raises(AnnotationError, match="unknown image id"):
            load_annotations(path)

    def test_missing_field_named(self, tmp_path):
        path = write_json(tmp_path / "bad.json", {"images": [{"id": 1, "width": 320}]})
        with pytest.raises(AnnotationError, match="height"):
            load_annotations(path)

    def test_detections_unknown_ids_listed(self, tmp_path):
        path = write_json(
            tmp_path / "dets.json",
            [
                {"image_id": 7, "bbox": [0, 0, 5, 5], "category_id": 1, "score": 0.5},
                {"image_id": 8, "bbox": [0, 0, 5, 5], "category_id": 1, "score": 0.5},
            ],
        )
        with pytest.raises(AnnotationError, match=r"\[7, 8\]"):
            load_detections(path, [1, 2])

    def test_detections_roundtrip(self, tmp_path):
        path = write_json(
            tmp_path / "dets.json",
            [{"image_id": 1, "bbox": [10, 20, 30, 40], "category_id": 2, "score": 0.75}],
        )
        (det,) = load_detections(path, [1])
        assert det.class_id == 2
        assert det.score == 0.75
        assert det.box.as_tuple() == (10, 20, 40, 60)


class TestAssignCommand:
    def test_synthetic_run_writes_files(self, tmp_path):
        out = tmp_path / "out"
        assert main(["assign", "--synthetic", "--seed", "7", "--out", str(out), "--svg"]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == [
            "scene-0000.diff.json",
            "scene-0000.mutual.json",
            "scene-0000.static.json",
            "scene-0000.svg",
        ]
        diff = json.loads((out / "scene-0000.diff.json").read_text())
        assert diff["format_version"] == 1
        # dynamic budgets equal the static ones object by object
        for row in diff["per_object"]:
            assert row["baseline_positives"] >= 1
        static = json.loads((out / "scene-0000.static.json").read_text())
        assert static["mode"] == "anchors"
        assert len(static["classification"]) == 7500

    def test_boat_fixture_counts_via_cli(self, annotation_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["assign", "--annotations", annotation_file, "--out", str(out)]) == 0
        payload = json.loads((out / "1.static.json").read_text())
        assert payload["per_object_counts"][0] == {"positive": 6, "ignored": 3}
        # the empty image is skipped with a warning on stderr
        assert "no annotations" in capsys.readouterr().err

    def test_rerun_byte_identical(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        argv = ["assign", "--synthetic", "--seed", "3", "--svg"]
        assert main(argv + ["--out", str(out_a)]) == 0
        assert main(argv + ["--out", str(out_b)]) == 0
        for path in sorted(out_a.iterdir()):
            assert path.read_bytes() == (out_b / path.name).read_bytes()

    def test_point_strategy(self, tmp_path):
        out = tmp_path / "out"
        argv = ["assign", "--synthetic", "--seed", "3", "--strategy", "fcos-mutual",
                "--out", str(out), "--svg"]
        assert main(argv) == 0
        payload = json.loads((out / "scene-0000.fcos.json").read_text())
        assert payload["mode"] == "points"
        assert all(row["positive"] >= 1 for row in payload["per_object_counts"])

    def test_static_strategy_diff_is_empty(self, tmp_path):
        out = tmp_path / "out"
        argv = ["assign", "--synthetic", "--seed", "2", "--strategy", "static",
                "--out", str(out)]
        assert main(argv) == 0
        diff = json.loads((out / "scene-0000.diff.json").read_text())
        assert diff["only_baseline"] == [] and diff["only_strategy"] == []

    def test_requires_one_source(self, tmp_path, capsys):
        assert main(["assign", "--out", str(tmp_path / "x")]) == 1
        assert "input source" in capsys.readouterr().err

    def test_both_sources_rejected(self, annotation_file, tmp_path, capsys):
        argv = ["assign", "--annotations", annotation_file, "--synthetic",
                "--out", str(tmp_path / "x")]
        assert main(argv) == 1
        assert "exactly one" in capsys.readouterr().err

    def test_bad_annotation_file_fails(self, tmp_path, capsys):
        path = write_json(
            tmp_path / "bad.json",
            {
                "images": [{"id": 1, "width": 320, "height": 320}],
                "annotations": [{"image_id": 1, "bbox": [10, 10, -5, 20], "category_id": 1}],
            },
        )
        assert main(["assign", "--annotations", path, "--out", str(tmp_path / "x")]) == 1
        assert "annotations[0]" in capsys.readouterr().err

    def test_config_file_overrides(self, tmp_path):
        config = write_json(
            tmp_path / "config.json",
            {
                "levels": [{"stride": 32, "scales": [64], "aspect_ratios": [1.0]}],
                "scene": {"count_range": [2, 2]},
            },
        )
        out = tmp_path / "out"
        argv = ["assign", "--synthetic", "--config", config, "--out", str(out)]
        assert main(argv) == 0
        payload = json.loads((out / "scene-0000.static.json").read_text())
        assert len(payload["classification"]) == 100  # 10x10 grid, one shape
        assert len(payload["per_object_counts"]) == 2


class TestSimulateCommand:
    def test_writes_trajectory_and_verdict(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["simulate", "--synthetic", "--seed", "7", "--out", str(out)]) == 0
        payload = json.loads((out / "trajectory.json").read_text())
        assert payload["verdict"]["dynamic_constant"] is True
        assert payload["verdict"]["fixed_growth_factor"] > 1.0
        counts = [s["positive_count"] for s in payload["dynamic"]["steps"]]
        assert len(set(counts)) == 1
        stdout = capsys.readouterr().out
        assert "dynamic constant: yes" in stdout

    def test_rerun_byte_identical(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        argv = ["simulate", "--synthetic", "--seed", "5"]
        assert main(argv + ["--out", str(out_a)]) == 0
        assert main(argv + ["--out", str(out_b)]) == 0
        assert (out_a / "trajectory.json").read_bytes() == (out_b / "trajectory.json").read_bytes()


class TestEvaluateCommand:
    def test_perfect_detections_print_ones(self, annotation_file, tmp_path, capsys):
        dets = write_json(
            tmp_path / "dets.json",
            [
                {"image_id": 1, "bbox": BOAT_BBOX, "category_id": 1, "score": 1.0},
                {"image_id": 1, "bbox": [200, 40, 80, 60], "category_id": 2, "score": 1.0},
            ],
        )
        out = tmp_path / "out"
        argv = ["evaluate", "--annotations", annotation_file, "--detections", dets,
                "--out", str(out)]
        assert main(argv) == 0
        stdout = capsys.readouterr().out
        assert stdout.count("1.000") == 3
        payload = json.loads((out / "evaluation.json").read_text())
        assert payload["ap"] == 1.0

    def test_empty_detections_zero(self, annotation_file, tmp_path, capsys):
        dets = write_json(tmp_path / "dets.json", [])
        out = tmp_path / "out"
        argv = ["evaluate", "--annotations", annotation_file, "--detections", dets,
                "--out", str(out)]
        assert main(argv) == 0
        payload = json.loads((out / "evaluation.json").read_text())
        assert payload["ap"] == 0.0 and payload["ap50"] == 0.0

    def test_hand_computed_case(self, tmp_path):
        gt = write_json(
            tmp_path / "gt.json",
            {
                "images": [{"id": 1, "width": 320, "height": 320}],
                "annotations": [{"image_id": 1, "bbox": [0, 0, 10, 10], "category_id": 1}],
                "categories": [{"id": 1, "name": "thing"}],
            },
        )
        dets = write_json(
            tmp_path / "dets.json",
            [
                {"image_id": 1, "bbox": [0, 0, 10, 6], "category_id": 1, "score": 0.9},
                {"image_id": 1, "bbox": [50, 50, 10, 10], "category_id": 1, "score": 0.8},
            ],
        )
        out = tmp_path / "out"
        assert main(["evaluate", "--annotations", gt, "--detections", dets, "--out", str(out)]) == 0
        payload = json.loads((out / "evaluation.json").read_text())
        assert payload["ap50"] == 1.0
        assert payload["ap75"] == 0.0

    def test_unknown_image_id_rejected(self, annotation_file, tmp_path, capsys):
        dets = write_json(
            tmp_path / "dets.json",
            [{"image_id": 99, "bbox": [0, 0, 5, 5], "category_id": 1, "score": 0.9}],
        )
        argv = ["evaluate", "--annotations", annotation_file, "--detections", dets,
                "--out", str(tmp_path / "out")]
        assert main(argv) == 1
        assert "99" in capsys.readouterr().err

    def test_requires_detections(self, annotation_file, tmp_path, capsys):
        argv = ["evaluate", "--annotations", annotation_file, "--out", str(tmp_path / "out")]
        assert main(argv) == 1
        assert "--detections" in capsys.readouterr().err
