"""Multi-object tracking with learned min-cost-flow weights."""

from .data import (
    Detection, GroundTruthTrack, OutputTrack, ParseError, PointTrack,
    TrackEntry, TrackPoint, ValidationError, read_dataset,
)
from .estimator import GraphFlowTracker
from .geometry import BoundingBox, contains, ioa, iou
from .ggd import (
    GeneralizedGraphDifference, PerturbationKind, dataset_stats, diff,
    enumerate_perturbations, ground_truth_solution, subtrack_examples,
)
from .graph import (
    GraphParams, KltConnection, LongConnection, TrackingGraph, build_graph,
)
from .metrics import MotReport, evaluate
from .pipeline import ChunkPlan, interpolate_track, plan_chunks, stitch, track_sequence
from .scoring import (
    ModelConfig, ScoringModel, f_detect, f_edge, load_model, loss_and_gradients,
    save_model, score_ggd, score_solution,
)
from .solution import FeasibleSolution, check_feasible, solution_to_tracks
from .solver import WeightedGraph, brute_force_solve, node_split, solve, weigh
from .synth import Scenario, ScenarioConfig, crossing_fixture, generate_scenario
from .training import TrainConfig, TrainReport, ranking_accuracy, ranking_loss, subsample, train

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "ChunkPlan", "Detection", "FeasibleSolution",
    "GeneralizedGraphDifference", "GraphFlowTracker", "GraphParams",
    "GroundTruthTrack", "KltConnection", "LongConnection", "ModelConfig",
    "MotReport", "OutputTrack", "ParseError", "PerturbationKind", "PointTrack",
    "Scenario", "ScenarioConfig", "ScoringModel", "TrackEntry", "TrackPoint",
    "TrackingGraph", "TrainConfig", "TrainReport", "ValidationError",
    "WeightedGraph", "brute_force_solve", "build_graph", "check_feasible",
    "contains", "crossing_fixture", "dataset_stats", "diff",
    "enumerate_perturbations", "evaluate", "f_detect", "f_edge",
    "generate_scenario", "ground_truth_solution", "interpolate_track", "ioa",
    "iou", "load_model", "loss_and_gradients", "node_split", "plan_chunks",
    "ranking_accuracy", "ranking_loss", "read_dataset", "save_model",
    "score_ggd", "score_solution", "solution_to_tracks", "solve", "stitch",
    "subsample", "subtrack_examples", "track_sequence", "train", "weigh",
]
