"""End-to-end runs of every subcommand against synthetic recordings."""

import hashlib
import json

import pytest

from gaitpass.cli import main
from gaitpass.config import file_sha256

WALK = """\
dataset:
  kind: synthetic
  cycles: 10
  period_mean: 64.0
  period_jitter: 1.0
  sensors: 2
  noise: 0.03
  phases: 6
  subjects:
    walkerA: {seed: 5}
hca:
  h_feet: 8
cycles:
  min_runs: 3
"""

PAIR = """\
dataset:
  kind: synthetic
  cycles: 10
  period_mean: 64.0
  period_jitter: 1.0
  sensors: 2
  noise: 0.03
  phases: 6
  subjects:
    ann: {seed: 11}
    bob: {seed: 12}
coding:
  alpha: 0.3
  beta: 0.7
pssa:
  coverage: 0.95
  segment_length: 100
  max_keys: 10
"""


def config_file(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_manifest(outdir):
    return json.loads((outdir / "manifest.json").read_text())


class TestCycles:
    def test_artifacts_and_manifest(self, tmp_path, capsys):
        cfg = config_file(tmp_path, WALK)
        out = tmp_path / "run1"
        assert main(["cycles", "-c", cfg, "-o", str(out)]) == 0
        assert "wrote" in capsys.readouterr().out
        for name in ("cycles.tsv", "report.json", "codebook_feet.txt",
                     "manifest.json"):
            assert (out / name).exists(), name

        manifest = read_manifest(out)
        assert manifest["command"] == "cycles"
        assert manifest["config_sha256"] == file_sha256(cfg)
        assert "output_dir" not in manifest["parameters"]
        for name, digest in manifest["artifacts"].items():
            data = (out / name).read_bytes()
            assert hashlib.sha256(data).hexdigest() == digest

        report = json.loads((out / "report.json").read_text())
        assert report["subject"] == "walkerA"
        assert report["n_cycles"] >= 8
        assert set(report["landmark"]) == {"S0", "S1"}
        header = (out / "cycles.tsv").read_text().splitlines()[0]
        assert header == "cycle\tstart\tlength"

    def test_set_overrides_recorded(self, tmp_path):
        cfg = config_file(tmp_path, WALK)
        out = tmp_path / "run2"
        rc = main([
            "cycles", "-c", cfg, "-o", str(out),
            "--set", "cycles.min_runs=4",
            "--set", "output_dir=should_not_appear",
        ])
        assert rc == 0
        manifest = read_manifest(out)
        assert manifest["overrides"] == ["cycles.min_runs=4"]
        assert manifest["parameters"]["cycles"]["min_runs"] == 4
        assert not (tmp_path / "should_not_appear").exists()


class TestComplexity:
    def test_table_and_chart(self, tmp_path):
        cfg = config_file(tmp_path, WALK + "complexity:\n  h_sweep: [2, 3, 5]\n")
        out = tmp_path / "cx"
        assert main(["complexity", "-c", cfg, "-o", str(out)]) == 0
        lines = (out / "complexity_table.tsv").read_text().splitlines()
        assert lines[0] == "coding\tstates\tlz76"
        labels = [line.split("\t")[0] for line in lines[1:]]
        assert labels == [
            "ternary-X", "ternary-Y", "ternary-Z", "ternary-resultant",
            "ternary-coupled", "cluster-2", "cluster-3", "cluster-5",
        ]
        values = [int(line.split("\t")[2]) for line in lines[1:]]
        assert all(v >= 1 for v in values)
        assert "polyline" in (out / "complexity_chart.svg").read_text()


class TestPssa:
    def test_train_then_classify(self, tmp_path):
        cfg = config_file(tmp_path, PAIR)
        train_out = tmp_path / "model"
        assert main(["pssa-train", "-c", cfg, "-o", str(train_out)]) == 0
        for name in ("model.txt", "coding.txt", "sigma_train.tsv",
                     "sigma_test.tsv", "sigma_heatmap.svg", "report.json"):
            assert (train_out / name).exists(), name
        report = json.loads((train_out / "report.json").read_text())
        assert report["n_subjects"] == 2
        assert report["train_rows"] == report["test_rows"] == 6
        assert 0.0 <= report["test_accuracy"] <= 1.0
        assert report["coverage_at_pss"] >= 0.95

        classify_cfg = config_file(
            tmp_path,
            PAIR + (
                f"  model: {train_out / 'model.txt'}\n"
                f"  coding: {train_out / 'coding.txt'}\n"
            ),
            name="classify.yaml",
        )
        cls_out = tmp_path / "cls"
        assert main(["pssa-classify", "-c", classify_cfg, "-o", str(cls_out)]) == 0
        lines = (cls_out / "classifications.tsv").read_text().splitlines()
        assert lines[0] == "claimed\tsegment\tpredicted\tfallback\tscore"
        assert len(lines) == 13
        manifest = read_manifest(cls_out)
        assert str(train_out / "model.txt") in manifest["inputs"]
        assert str(train_out / "coding.txt") in manifest["inputs"]

    def test_train_needs_two_subjects(self, tmp_path, capsys):
        cfg = config_file(tmp_path, WALK + "pssa:\n  coverage: 0.9\n")
        assert main(["pssa-train", "-c", cfg, "-o", str(tmp_path / "x")]) == 2
        err = json.loads(capsys.readouterr().err.splitlines()[0])
        assert err["error"] == "config"
        assert "two subjects" in err["message"]


class TestPasstensor:
    def test_build_compare_render(self, tmp_path):
        cfg = config_file(tmp_path, WALK + "passtensor:\n  bins: 16\n")
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["passtensor-build", "-c", cfg, "-o", str(out_a)]) == 0
        assert main(["passtensor-build", "-c", cfg, "-o", str(out_b)]) == 0
        text_a = (out_a / "passtensor.txt").read_bytes()
        assert text_a == (out_b / "passtensor.txt").read_bytes()
        report = json.loads((out_a / "report.json").read_text())
        assert report["tensor_shape"][1:] == [2, 16]

        compare_cfg = config_file(
            tmp_path,
            "passtensor:\n  compare:\n"
            f"    - {out_a / 'passtensor.txt'}\n"
            f"    - {out_b / 'passtensor.txt'}\n",
            name="compare.yaml",
        )
        cmp_out = tmp_path / "cmp"
        rc = main(["passtensor-compare", "-c", compare_cfg, "-o", str(cmp_out)])
        assert rc == 0
        diff = json.loads((cmp_out / "diff_report.json").read_text())
        assert diff["distance"] == 0.0
        assert diff["mismatch_count"] == 0
        assert diff["skeleton_agreement"] == 1.0

        render_cfg = config_file(
            tmp_path,
            "render:\n"
            f"  passtensor: {out_a / 'passtensor.txt'}\n"
            "  view: both\n",
            name="render.yaml",
        )
        r_out = tmp_path / "render"
        assert main(["render", "-c", render_cfg, "-o", str(r_out)]) == 0
        for name in ("rings.svg", "cylinder_unrolled.svg",
                     "cylinder_isometric.svg"):
            assert (r_out / name).exists(), name

    def test_ring_cycle_bounds_checked(self, tmp_path, capsys):
        cfg = config_file(tmp_path, WALK + "passtensor:\n  bins: 16\n")
        out = tmp_path / "pt"
        assert main(["passtensor-build", "-c", cfg, "-o", str(out)]) == 0
        render_cfg = config_file(
            tmp_path,
            f"render:\n  passtensor: {out / 'passtensor.txt'}\n"
            "  ring_cycle: 999\n",
            name="render.yaml",
        )
        rc = main(["render", "-c", render_cfg, "-o", str(tmp_path / "r")])
        assert rc == 2
        err = json.loads(capsys.readouterr().err.splitlines()[0])
        assert "ring_cycle" in err["message"]


class TestFailureModes:
    def test_config_error_exit_2(self, tmp_path, capsys):
        cfg = config_file(tmp_path, WALK)
        rc = main(["cycles", "-c", cfg, "-o", str(tmp_path / "o"),
                   "--set", "dataset.kind=bogus"])
        assert rc == 2
        err = json.loads(capsys.readouterr().err.splitlines()[0])
        assert err == {
            "error": "config",
            "exit_code": 2,
            "message": err["message"],
        }
        assert "dataset.kind" in err["message"]

    def test_data_error_exit_3(self, tmp_path, capsys):
        cfg = config_file(
            tmp_path,
            "dataset:\n  kind: marea\n  subjects:\n"
            f"    sub5: {tmp_path / 'absent.txt'}\n",
        )
        rc = main(["cycles", "-c", cfg, "-o", str(tmp_path / "o")])
        assert rc == 3
        err = json.loads(capsys.readouterr().err.splitlines()[0])
        assert err["error"] == "data"
        assert "cannot read" in err["message"]

    def test_precondition_error_exit_4(self, tmp_path, capsys):
        bogus = tmp_path / "bogus.txt"
        bogus.write_text("gaitpass-codebook v1\n")
        cfg = config_file(
            tmp_path,
            f"passtensor:\n  compare: [{bogus}, {bogus}]\n",
        )
        rc = main(["passtensor-compare", "-c", cfg, "-o", str(tmp_path / "o")])
        assert rc == 4
        err = json.loads(capsys.readouterr().err.splitlines()[0])
        assert err["error"] == "precondition"

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["cycles", "-c", str(tmp_path / "nope.yaml"),
                   "-o", str(tmp_path / "o")])
        assert rc == 2
        assert json.loads(capsys.readouterr().err.splitlines()[0])[
            "error"] == "config"
