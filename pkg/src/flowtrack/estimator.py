"""sklearn-style estimator facade over the tracking pipeline.

fit() consumes annotated sequences and trains the scoring model from
generated graph differences; predict() runs chunked flow tracking. All
constructor arguments are plain values so get_params/set_params/clone from
scikit-learn work unchanged.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import Detection, GroundTruthTrack, PointTrack
from .ggd import enumerate_perturbations, ground_truth_solution, subtrack_examples
from .graph import GraphParams, build_graph
from .metrics import evaluate
from .pipeline import plan_chunks, track_sequence
from .scoring import ModelConfig, ScoringModel
from .training import TrainConfig, train


def check_sequence(detections, point_tracks) -> None:
    """Validate one input sequence's element types."""
    for d in detections:
        if not isinstance(d, Detection):
            raise TypeError(f"expected Detection, got {type(d).__name__}")
    for t in point_tracks:
        if not isinstance(t, PointTrack):
            raise TypeError(f"expected PointTrack, got {type(t).__name__}")


def check_ground_truth(gt_tracks) -> None:
    for t in gt_tracks:
        if not isinstance(t, GroundTruthTrack):
            raise TypeError(f"expected GroundTruthTrack, got {type(t).__name__}")


class GraphFlowTracker(BaseEstimator):
    """Multi-object tracker with learned min-cost-flow weights.

    X is a list of sequences, each a (detections, point_tracks) pair; y (for
    fit) is the matching list of ground-truth track lists. predict returns a
    list of OutputTrack lists.
    """

    def __init__(self, fps=60, image_diagonal=2202.91, r_neighbours=5,
                 n_linpkt=5, n_minlen=2,
                 n_detlayers=4, n_detfeat=32, n_kltlayers=7, n_kltfeat=64,
                 n_longlayers=7, n_longfeat=32, n_combinelayers=4,
                 n_combinefeat=256,
                 learning_rate=1e-3, batch_size=256, max_epochs=10, patience=0,
                 val_fraction=0.1, chunk_length=600, overlap=60, seed=0):
        self.fps = fps
        self.image_diagonal = image_diagonal
        self.r_neighbours = r_neighbours
        self.n_linpkt = n_linpkt
        self.n_minlen = n_minlen
        self.n_detlayers = n_detlayers
        self.n_detfeat = n_detfeat
        self.n_kltlayers = n_kltlayers
        self.n_kltfeat = n_kltfeat
        self.n_longlayers = n_longlayers
        self.n_longfeat = n_longfeat
        self.n_combinelayers = n_combinelayers
        self.n_combinefeat = n_combinefeat
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.chunk_length = chunk_length
        self.overlap = overlap
        self.seed = seed

    def graph_params(self) -> GraphParams:
        return GraphParams.for_fps(self.fps, self.image_diagonal,
                                   r_neighbours=self.r_neighbours,
                                   n_linpkt=self.n_linpkt)

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            n_linpkt=self.n_linpkt,
            n_detlayers=self.n_detlayers, n_detfeat=self.n_detfeat,
            n_kltlayers=self.n_kltlayers, n_kltfeat=self.n_kltfeat,
            n_longlayers=self.n_longlayers, n_longfeat=self.n_longfeat,
            n_combinelayers=self.n_combinelayers, n_combinefeat=self.n_combinefeat)

    def fit(self, X, y):
        if len(X) != len(y) or not X:
            raise ValueError("X and y must be equal-length, non-empty sequence lists")
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must be in (0, 1)")
        params = self.graph_params()
        ggds = []
        for (detections, point_tracks), gt_tracks in zip(X, y):
            check_sequence(detections, point_tracks)
            check_ground_truth(gt_tracks)
            graph = build_graph(detections, point_tracks, params)
            x_star = ground_truth_solution(graph, gt_tracks)
            ggds.extend(enumerate_perturbations(graph, x_star))
            ggds.extend(subtrack_examples(graph, x_star, self.n_minlen))
        if not ggds:
            raise ValueError("no graph differences could be generated from X")
        rng = np.random.Generator(np.random.PCG64(self.seed))
        order = rng.permutation(len(ggds))
        n_val = max(1, int(round(self.val_fraction * len(ggds))))
        val = [ggds[i] for i in order[:n_val]]
        tr = [ggds[i] for i in order[n_val:]]
        if not tr:
            raise ValueError("validation split left no training examples")

        model = ScoringModel.initialize(self.model_config(), seed=self.seed)
        config = TrainConfig(learning_rate=self.learning_rate,
                             batch_size=self.batch_size,
                             max_epochs=self.max_epochs,
                             patience=self.patience, seed=self.seed)
        self.model_, self.report_ = train(model, tr, val, config)
        self.n_ggds_ = len(ggds)
        return self

    def _fitted_model(self) -> ScoringModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError("this GraphFlowTracker instance is not fitted yet")
        return model

    def predict(self, X):
        model = self._fitted_model()
        params = self.graph_params()
        out = []
        for detections, point_tracks in X:
            check_sequence(detections, point_tracks)
            if not detections:
                out.append([])
                continue
            frames = [d.frame for d in detections]
            plan = plan_chunks(min(frames), max(frames), self.chunk_length, self.overlap)
            out.append(track_sequence(detections, point_tracks, model, params, plan))
        return out

    def score(self, X, y, iou_threshold: float = 0.5) -> float:
        """Mean MOTA of the predictions against boxed reference tracks."""
        predictions = self.predict(X)
        motas = [evaluate(gt, hyp, iou_threshold).mota
                 for gt, hyp in zip(y, predictions)]
        return float(np.mean(motas))
