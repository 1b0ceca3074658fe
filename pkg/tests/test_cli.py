import json

import pytest

from flowtrack.cli import main
from flowtrack.data import read_output_tracks

SMALL_ARCH = [
    "--n-detlayers", "2", "--n-detfeat", "8", "--n-kltlayers", "2",
    "--n-kltfeat", "8", "--n-longlayers", "2", "--n-longfeat", "8",
    "--n-combinelayers", "2", "--n-combinefeat", "16",
]
FIXTURE_GRAPH = ["--fps", "10", "--image-diagonal", "500", "--r-neighbours", "3"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Full workflow on the crossing fixture: synth -> ggds -> train -> track."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out-dir", str(root), "--fixture"]) == 0
    assert main(["gen-ggds",
                 "--detections", f"{root}/detections.jsonl",
                 "--klt", f"{root}/klt.jsonl",
                 "--gt", f"{root}/gt.jsonl",
                 "--out", f"{root}/ggds.jsonl",
                 *FIXTURE_GRAPH]) == 0
    assert main(["train",
                 "--ggds", f"{root}/ggds.jsonl",
                 "--val", f"{root}/ggds.jsonl",
                 "--out", f"{root}/model.bin",
                 "--epochs", "3", "--batch-size", "64",
                 "--learning-rate", "0.003",
                 *SMALL_ARCH]) == 0
    assert main(["track",
                 "--detections", f"{root}/detections.jsonl",
                 "--klt", f"{root}/klt.jsonl",
                 "--model", f"{root}/model.bin",
                 "--out", f"{root}/tracks.jsonl",
                 "--mot-csv", f"{root}/tracks.csv",
                 *FIXTURE_GRAPH]) == 0
    return root


def test_synth_writes_dataset_files(workdir):
    for name in ("detections.jsonl", "klt.jsonl", "gt.jsonl", "gt_boxes.jsonl"):
        assert (workdir / name).exists()


def test_gen_ggds_outputs(workdir, capsys):
    manifest = json.loads((workdir / "ggds.jsonl.split.json").read_text())
    n = len((workdir / "ggds.jsonl").read_text().strip().splitlines())
    assert n > 500
    assert len(manifest["train"]) + len(manifest["val"]) == n


def test_train_outputs(workdir):
    assert (workdir / "model.bin").exists()
    report = json.loads((workdir / "model.bin.report.json").read_text())
    assert len(report["val_accuracy"]) == 3
    assert report["best_epoch"] >= 0


def test_track_outputs(workdir):
    tracks = read_output_tracks(workdir / "tracks.jsonl")
    assert tracks
    csv = (workdir / "tracks.csv").read_text().strip().splitlines()
    assert csv and csv[0].count(",") == 9


def test_eval_prints_and_writes_summary(workdir, capsys):
    assert main(["eval", "--gt", f"{workdir}/gt_boxes.jsonl",
                 "--hyp", f"{workdir}/tracks.jsonl",
                 "--out", f"{workdir}/summary.json"]) == 0
    out = capsys.readouterr().out
    assert "MOTA" in out and "IDF1" in out
    summary = json.loads((workdir / "summary.json").read_text())
    assert "MOTA" in summary and "FRAG" in summary


def test_eval_self_is_perfect(workdir, capsys):
    assert main(["eval", "--gt", f"{workdir}/gt_boxes.jsonl",
                 "--hyp", f"{workdir}/gt_boxes.jsonl"]) == 0
    assert "MOTA  1.0000" in capsys.readouterr().out


def test_build_graphs_dump(workdir, tmp_path):
    out = tmp_path / "graph.jsonl"
    assert main(["build-graphs",
                 "--detections", f"{workdir}/detections.jsonl",
                 "--klt", f"{workdir}/klt.jsonl",
                 "--out", str(out), *FIXTURE_GRAPH]) == 0
    lines = [json.loads(l) for l in out.read_text().strip().splitlines()]
    kinds = {l["type"] for l in lines}
    assert kinds == {"vertex", "edge"}


def test_config_file_with_flag_override(workdir, tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "fps": 10, "image_diagonal": 500.0, "r_neighbours": 999}))
    out = tmp_path / "graph.jsonl"
    # flag overrides the config's absurd r_neighbours
    assert main(["build-graphs",
                 "--detections", f"{workdir}/detections.jsonl",
                 "--klt", f"{workdir}/klt.jsonl",
                 "--out", str(out),
                 "--config", str(config), "--r-neighbours", "3"]) == 0
    n_override = len(out.read_text().strip().splitlines())
    assert main(["build-graphs",
                 "--detections", f"{workdir}/detections.jsonl",
                 "--klt", f"{workdir}/klt.jsonl",
                 "--out", str(out),
                 "--config", str(config)]) == 0
    n_config = len(out.read_text().strip().splitlines())
    assert n_config > n_override  # r_neighbours=999 adds many more edges


def test_missing_file_is_clean_error(tmp_path, capsys):
    code = main(["eval", "--gt", f"{tmp_path}/nope.jsonl",
                 "--hyp", f"{tmp_path}/nope.jsonl"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_study_subsample_smoke(workdir, tmp_path, capsys):
    out = tmp_path / "study.json"
    assert main(["study-subsample",
                 "--ggds", f"{workdir}/ggds.jsonl",
                 "--val", f"{workdir}/ggds.jsonl",
                 "--fractions", "0.2", "--repeats", "2",
                 "--epochs", "2", "--batch-size", "64",
                 "--out", str(out), *SMALL_ARCH]) == 0
    study = json.loads(out.read_text())
    assert "0.2" in study and len(study["0.2"]) == 2
