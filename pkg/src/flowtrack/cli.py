"""Command-line surface for the tracking workflows.

Every subcommand accepts --config pointing at a JSON file whose keys are the
long option names (underscored); explicit flags override config values, and
built-in defaults fill the rest. Environment variables are never consulted.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import data
from .ggd import (
    dataset_stats, enumerate_perturbations, ground_truth_solution, read_ggds,
    subtrack_examples, write_ggds, write_split_manifest,
)
from .graph import GraphParams, build_graph, dump_graph
from .metrics import evaluate
from .pipeline import plan_chunks, track_sequence
from .scoring import ModelConfig, ScoringModel, load_model, save_model
from .synth import ScenarioConfig, crossing_fixture, generate_scenario
from .training import TrainConfig, ranking_accuracy, subsample, train

GRAPH_OPTS = {
    "fps": 60, "image_diagonal": 2202.91, "r_neighbours": 5, "n_linpkt": 5,
    "t_max": None, "n_velest": None, "n_project": None,
}
MODEL_OPTS = {
    "n_detlayers": 4, "n_detfeat": 32, "n_kltlayers": 7, "n_kltfeat": 64,
    "n_longlayers": 7, "n_longfeat": 32, "n_combinelayers": 4, "n_combinefeat": 256,
}


def _add_options(parser, options):
    for name, default in options.items():
        kind = type(default) if default is not None else float
        if kind is bool:
            parser.add_argument(f"--{name.replace('_', '-')}", default=None,
                                action="store_true")
        else:
            parser.add_argument(f"--{name.replace('_', '-')}", type=kind, default=None)


def _resolve(args, defaults):
    """Merge precedence: explicit flag > config file > built-in default."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    values = {}
    for name, default in defaults.items():
        given = getattr(args, name, None)
        if given is not None:
            values[name] = given
        elif name in config:
            values[name] = config[name]
        else:
            values[name] = default
    return values


def _graph_params(values) -> GraphParams:
    fps = int(values["fps"])
    return GraphParams(
        fps=fps,
        r_neighbours=int(values["r_neighbours"]),
        t_max=int(values["t_max"]) if values["t_max"] is not None else 3 * fps,
        n_velest=int(values["n_velest"]) if values["n_velest"] is not None
        else max(2, fps // 2),
        n_project=int(values["n_project"]) if values["n_project"] is not None else fps,
        n_linpkt=int(values["n_linpkt"]),
        image_diagonal=float(values["image_diagonal"]),
    )


def _model_config(values) -> ModelConfig:
    return ModelConfig(
        n_linpkt=int(values["n_linpkt"]),
        n_detlayers=int(values["n_detlayers"]), n_detfeat=int(values["n_detfeat"]),
        n_kltlayers=int(values["n_kltlayers"]), n_kltfeat=int(values["n_kltfeat"]),
        n_longlayers=int(values["n_longlayers"]), n_longfeat=int(values["n_longfeat"]),
        n_combinelayers=int(values["n_combinelayers"]),
        n_combinefeat=int(values["n_combinefeat"]))


def _ggds_for(values, detections_path, klt_path, gt_path):
    detections, tracks, gt = data.read_dataset(detections_path, klt_path, gt_path)
    params = _graph_params(values)
    graph = build_graph(detections, tracks, params)
    x_star = ground_truth_solution(graph, gt)
    ggds = enumerate_perturbations(graph, x_star)
    ggds += subtrack_examples(graph, x_star, int(values["n_minlen"]))
    return ggds


def cmd_synth(args):
    defaults = {
        "objects": 20, "frames": 600, "width": 1920, "height": 1080,
        "miss_rate": 0.10, "fp_rate": 2.0, "jitter": 2.0, "klt_per_object": 3,
        "jump_rate": 0.3, "fps": 10, "seed": 0, "fixture": False,
    }
    v = _resolve(args, defaults)
    if v["fixture"]:
        scenario = crossing_fixture()
    else:
        scenario = generate_scenario(ScenarioConfig(
            n_objects=int(v["objects"]), n_frames=int(v["frames"]),
            image_width=int(v["width"]), image_height=int(v["height"]),
            miss_rate=float(v["miss_rate"]), fp_rate=float(v["fp_rate"]),
            jitter_sigma=float(v["jitter"]), klt_per_object=int(v["klt_per_object"]),
            klt_jump_rate=float(v["jump_rate"]), fps=int(v["fps"]),
            seed=int(v["seed"])))
    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    data.write_detections(f"{out}/detections.jsonl", scenario.detections)
    data.write_point_tracks(f"{out}/klt.jsonl", scenario.point_tracks)
    data.write_ground_truth(f"{out}/gt.jsonl", scenario.gt_tracks)
    data.write_output_tracks(f"{out}/gt_boxes.jsonl", scenario.true_tracks)
    print(f"wrote {len(scenario.detections)} detections, "
          f"{len(scenario.point_tracks)} point tracks, "
          f"{len(scenario.gt_tracks)} ground-truth tracks to {out}")
    return 0


def cmd_build_graphs(args):
    defaults = dict(GRAPH_OPTS)
    v = _resolve(args, defaults)
    detections, tracks, _ = data.read_dataset(args.detections, args.klt)
    graph = build_graph(detections, tracks, _graph_params(v))
    dump_graph(graph, args.out)
    print(f"graph: {graph.n_vertices} vertices, {graph.n_edges} edges -> {args.out}")
    return 0


def cmd_gen_ggds(args):
    defaults = dict(GRAPH_OPTS)
    defaults.update({"n_minlen": 2, "val_fraction": 0.1, "seed": 0})
    v = _resolve(args, defaults)
    ggds = _ggds_for(v, args.detections, args.klt, args.gt)
    write_ggds(args.out, ggds)
    manifest_path = args.manifest or f"{args.out}.split.json"
    write_split_manifest(manifest_path, len(ggds), float(v["val_fraction"]),
                         int(v["seed"]))
    stats = dataset_stats(ggds)
    print(f"wrote {len(ggds)} graph differences -> {args.out}")
    for kind, count in sorted(stats.items()):
        print(f"  {kind}: {count}")
    print(f"split manifest -> {manifest_path}")
    return 0


def cmd_train(args):
    defaults = dict(MODEL_OPTS)
    defaults.update({
        "n_linpkt": 5, "epochs": 10, "patience": 0, "seed": 0,
        "learning_rate": 1e-3, "batch_size": 256,
    })
    v = _resolve(args, defaults)
    train_ggds = read_ggds(args.ggds)
    val_ggds = read_ggds(args.val)
    model = ScoringModel.initialize(_model_config(v), seed=int(v["seed"]))
    config = TrainConfig(
        learning_rate=float(v["learning_rate"]), batch_size=int(v["batch_size"]),
        max_epochs=int(v["epochs"]), patience=int(v["patience"]),
        seed=int(v["seed"]))
    trained, report = train(model, train_ggds, val_ggds, config, verbose=True)
    save_model(trained, args.out)
    report_path = args.report or f"{args.out}.report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    print(f"best epoch {report.best_epoch} "
          f"(val_acc {report.val_accuracy[report.best_epoch]:.4f}) -> {args.out}")
    return 0


def cmd_track(args):
    defaults = dict(GRAPH_OPTS)
    defaults.update({"chunk": 600, "overlap": 60})
    v = _resolve(args, defaults)
    detections, tracks, _ = data.read_dataset(args.detections, args.klt)
    model = load_model(args.model)
    if not detections:
        data.write_output_tracks(args.out, [])
        print("no detections; wrote empty track file")
        return 0
    frames = [d.frame for d in detections]
    plan = plan_chunks(min(frames), max(frames), int(v["chunk"]), int(v["overlap"]))
    out_tracks = track_sequence(detections, tracks, model, _graph_params(v), plan)
    data.write_output_tracks(args.out, out_tracks)
    if args.mot_csv:
        data.write_mot_csv(args.mot_csv, out_tracks)
    print(f"tracked {len(out_tracks)} tracks over {len(plan.windows)} chunks -> {args.out}")
    return 0


def cmd_eval(args):
    gt = data.read_output_tracks(args.gt)
    hyp = data.read_output_tracks(args.hyp)
    report = evaluate(gt, hyp, args.iou)
    print(report.format_report())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    return 0


def cmd_study_subsample(args):
    defaults = dict(MODEL_OPTS)
    defaults.update({
        "n_linpkt": 5, "epochs": 60, "patience": 3, "seed": 0,
        "learning_rate": 1e-3, "batch_size": 64,
    })
    v = _resolve(args, defaults)
    train_ggds = read_ggds(args.ggds)
    val_ggds = read_ggds(args.val)
    fractions = [float(f) for f in args.fractions.split(",")]
    results = {}
    for fraction in fractions:
        accs = []
        for rep in range(args.repeats):
            seed = int(v["seed"]) + rep
            sub = subsample(train_ggds, fraction, seed=seed)
            model = ScoringModel.initialize(_model_config(v), seed=seed)
            config = TrainConfig(
                learning_rate=float(v["learning_rate"]),
                batch_size=int(v["batch_size"]), max_epochs=int(v["epochs"]),
                patience=int(v["patience"]), seed=seed)
            trained, _ = train(model, sub, val_ggds, config)
            accs.append(ranking_accuracy(trained, val_ggds))
        results[fraction] = accs
        print(f"fraction {fraction:g}: n={len(sub)} median_acc "
              f"{float(np.median(accs)):.4f} (runs: {['%.4f' % a for a in accs]})")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({str(k): v for k, v in results.items()}, fh, indent=2)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowtrack",
        description="Multi-object tracking with learned min-cost-flow weights")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    _add_options(p, {"objects": 20, "frames": 600, "width": 1920, "height": 1080,
                     "miss_rate": 0.10, "fp_rate": 2.0, "jitter": 2.0,
                     "klt_per_object": 3, "jump_rate": 0.3, "fps": 10, "seed": 0})
    p.add_argument("--fixture", action="store_true", default=None,
                   help="emit the canonical crossing fixture instead")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-graphs", help="build and dump a tracking graph")
    p.add_argument("--detections", required=True)
    p.add_argument("--klt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    _add_options(p, GRAPH_OPTS)
    p.set_defaults(func=cmd_build_graphs)

    p = sub.add_parser("gen-ggds", help="generate training graph differences")
    p.add_argument("--detections", required=True)
    p.add_argument("--klt", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.add_argument("--config")
    _add_options(p, dict(GRAPH_OPTS, n_minlen=2, val_fraction=0.1, seed=0))
    p.set_defaults(func=cmd_gen_ggds)

    p = sub.add_parser("train", help="train a scoring model on graph differences")
    p.add_argument("--ggds", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--config")
    _add_options(p, dict(MODEL_OPTS, n_linpkt=5, epochs=10, patience=0, seed=0,
                         learning_rate=1e-3, batch_size=256))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("track", help="run tracking over a sequence")
    p.add_argument("--detections", required=True)
    p.add_argument("--klt", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mot-csv")
    p.add_argument("--config")
    _add_options(p, dict(GRAPH_OPTS, chunk=600, overlap=60))
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score hypothesis tracks against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("study-subsample",
                       help="training-data subsampling study (ranking accuracy)")
    p.add_argument("--ggds", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--fractions", default="1,0.1,0.01")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--config")
    _add_options(p, dict(MODEL_OPTS, n_linpkt=5, epochs=60, patience=3, seed=0,
                         learning_rate=1e-3, batch_size=64))
    p.set_defaults(func=cmd_study_subsample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (data.ParseError, data.ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
