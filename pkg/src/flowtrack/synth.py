"""Deterministic synthetic tracking scenarios.

Objects follow piecewise-linear waypoint paths. A detector is simulated by
dropping boxes at the miss rate, jittering the survivors and adding Poisson
false positives. Sparse feature-point tracks ride along inside each object's
box and, while two boxes overlap, may jump to the other object at the
configured rate, leaving a low-confidence point on the jump frame; the
source object respawns a replacement point so coverage survives occlusions.

Everything derives from one seeded generator: the same seed and config give
byte-identical datasets.
"""

import math
from dataclasses import dataclass

import numpy as np

from .data import Detection, GroundTruthTrack, OutputTrack, PointTrack, TrackEntry, TrackPoint
from .geometry import BoundingBox, iou
from .graph import GraphParams

OCCLUSION_IOU = 0.3


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    n_objects: int = 20
    n_frames: int = 600
    image_width: int = 1920
    image_height: int = 1080
    miss_rate: float = 0.10
    fp_rate: float = 2.0
    jitter_sigma: float = 2.0
    klt_per_object: int = 3
    klt_jump_rate: float = 0.3
    fps: int = 10
    n_waypoints: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.n_objects <= 0 or self.n_frames <= 0:
            raise ValueError("need at least one object and one frame")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image size must be positive")
        for name in ("miss_rate", "klt_jump_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.fp_rate < 0 or self.jitter_sigma < 0:
            raise ValueError("fp_rate and jitter_sigma must be non-negative")

    @property
    def image_diagonal(self) -> float:
        return math.hypot(self.image_width, self.image_height)


@dataclass
class Scenario:
    """One generated sequence: the three dataset collections plus the true
    per-frame trajectories used as the evaluation reference."""

    config: ScenarioConfig
    detections: list
    point_tracks: list
    gt_tracks: list
    true_tracks: list

    def graph_params(self, r_neighbours: int = 5, n_linpkt: int = 5) -> GraphParams:
        return GraphParams.for_fps(self.config.fps, self.config.image_diagonal,
                                   r_neighbours=r_neighbours, n_linpkt=n_linpkt)


class _WaypointPath:
    def __init__(self, rng, config, w, h):
        self.w = w
        self.h = h
        margin_x = w / 2
        margin_y = h / 2
        times = np.linspace(0, config.n_frames - 1, config.n_waypoints)
        xs = rng.uniform(margin_x, config.image_width - margin_x, config.n_waypoints)
        ys = rng.uniform(margin_y, config.image_height - margin_y, config.n_waypoints)
        self.times = times
        self.xs = xs
        self.ys = ys

    def center(self, frame: int) -> tuple[float, float]:
        return (float(np.interp(frame, self.times, self.xs)),
                float(np.interp(frame, self.times, self.ys)))

    def box(self, frame: int) -> BoundingBox:
        cx, cy = self.center(frame)
        return BoundingBox(cx - self.w / 2, cy - self.h / 2,
                           cx + self.w / 2, cy + self.h / 2)


def generate_scenario(config: ScenarioConfig) -> Scenario:
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n_f, n_o = config.n_frames, config.n_objects

    paths = []
    for _ in range(n_o):
        w = rng.uniform(40.0, 80.0)
        h = rng.uniform(70.0, 130.0)
        paths.append(_WaypointPath(rng, config, w, h))
    boxes = [[p.box(f) for p in paths] for f in range(n_f)]

    # detector simulation
    miss = rng.uniform(size=(n_f, n_o)) < config.miss_rate
    jitter = rng.normal(0.0, config.jitter_sigma, size=(n_f, n_o, 2))
    conf = np.clip(rng.normal(0.8, 0.1, size=(n_f, n_o)), 0.05, 1.0)
    fp_counts = rng.poisson(config.fp_rate, size=n_f)

    detections = []
    gt_det_ids = [[] for _ in range(n_o)]
    det_id = 0
    for f in range(n_f):
        for o in range(n_o):
            if miss[f, o]:
                continue
            dx, dy = jitter[f, o]
            detections.append(Detection(det_id, f, boxes[f][o].translated(dx, dy),
                                        float(conf[f, o])))
            gt_det_ids[o].append(det_id)
            det_id += 1
        for _ in range(int(fp_counts[f])):
            w = rng.uniform(40.0, 80.0)
            h = rng.uniform(70.0, 130.0)
            cx = rng.uniform(w / 2, config.image_width - w / 2)
            cy = rng.uniform(h / 2, config.image_height - h / 2)
            c = float(np.clip(rng.normal(0.45, 0.15), 0.05, 1.0))
            detections.append(Detection(
                det_id, f, BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2), c))
            det_id += 1

    # overlap table for the jump model
    overlaps = [[] for _ in range(n_f)]
    for f in range(n_f):
        for a in range(n_o):
            best, best_iou = -1, OCCLUSION_IOU
            for b in range(n_o):
                if a == b:
                    continue
                v = iou(boxes[f][a], boxes[f][b])
                if v > best_iou:
                    best, best_iou = b, v
            overlaps[f].append(best)

    # frame-synchronized point simulation; a jump moves the point to the
    # overlapping object and the source object respawns a replacement, but
    # only while it owns fewer than klt_per_object points (bounds growth)
    class _Active:
        __slots__ = ("obj", "fx", "fy", "points")

        def __init__(self, obj, fx, fy):
            self.obj = obj
            self.fx = fx
            self.fy = fy
            self.points = []

    def sample_offsets():
        fx, fy = rng.uniform(0.2, 0.8, size=2)
        return float(fx), float(fy)

    def append_point(tr, f, jumped):
        b = boxes[f][tr.obj]
        x = b.x1 + tr.fx * (b.x2 - b.x1) + rng.normal(0.0, 0.2)
        y = b.y1 + tr.fy * (b.y2 - b.y1) + rng.normal(0.0, 0.2)
        c = -(0.5 + 0.3 * rng.uniform()) if jumped else -abs(rng.normal(0.0, 0.05))
        tr.points.append(TrackPoint(f, float(x), float(y), float(c)))

    active = []
    owned = [0] * n_o
    for o in range(n_o):
        for _ in range(config.klt_per_object):
            active.append(_Active(o, *sample_offsets()))
            owned[o] += 1
    for f in range(n_f):
        respawn = []
        for tr in active:
            target = overlaps[f][tr.obj]
            jumped = False
            if target >= 0 and rng.uniform() < config.klt_jump_rate:
                owned[tr.obj] -= 1
                if owned[tr.obj] < config.klt_per_object:
                    respawn.append(tr.obj)
                tr.obj = target
                owned[target] += 1
                tr.fx, tr.fy = sample_offsets()
                jumped = True
            append_point(tr, f, jumped)
        for o in respawn:
            if owned[o] < config.klt_per_object:
                tr = _Active(o, *sample_offsets())
                owned[o] += 1
                append_point(tr, f, False)
                active.append(tr)

    point_tracks = []
    track_id = 0
    for tr in active:
        if len(tr.points) >= 2:
            point_tracks.append(PointTrack(track_id, tuple(tr.points)))
            track_id += 1

    gt_tracks = [GroundTruthTrack(o, tuple(gt_det_ids[o])) for o in range(n_o)]
    true_tracks = [
        OutputTrack(o, tuple(TrackEntry(f, boxes[f][o], False) for f in range(n_f)))
        for o in range(n_o)
    ]
    return Scenario(config, detections, point_tracks, gt_tracks, true_tracks)


def _fixture_tracks(track_id, frames, positions, low_conf_frames=()):
    points = tuple(
        TrackPoint(f, float(x), float(y), -0.8 if f in low_conf_frames else -0.05)
        for f, (x, y) in zip(frames, positions))
    return PointTrack(track_id, points)


def crossing_fixture() -> Scenario:
    """Two objects crossing with an occlusion gap and swapping feature
    points, a second pair forming an end-to-start handover, plus false
    positives wired into the graph. Exercises long-range connections and
    every perturbation kind; fully handcrafted, no randomness.
    """
    n_frames = 60
    config = ScenarioConfig(
        n_objects=4, n_frames=n_frames, image_width=400, image_height=300,
        miss_rate=0.0, fp_rate=0.0, jitter_sigma=0.0, klt_per_object=2,
        klt_jump_rate=0.0, fps=10, seed=0)
    w, h = 30.0, 40.0

    def abox(t):
        return BoundingBox(20 + 6 * t - w / 2, 150 - h / 2, 20 + 6 * t + w / 2, 150 + h / 2)

    def bbox(t):
        return BoundingBox(380 - 6 * t - w / 2, 150 - h / 2, 380 - 6 * t + w / 2, 150 + h / 2)

    def cbox(t):
        return BoundingBox(50 + 4 * t - w / 2, 60 - h / 2, 50 + 4 * t + w / 2, 60 + h / 2)

    def dbox(t):
        return BoundingBox(160 + 4 * (t - 30) - w / 2, 60 - h / 2,
                           160 + 4 * (t - 30) + w / 2, 60 + h / 2)

    spans = {
        0: (range(0, n_frames), abox, {33, 34, 35}),   # object A, occluded 33-35
        1: (range(0, n_frames), bbox, set()),          # object B
        2: (range(0, 25), cbox, set()),                # object C, leaves
        3: (range(30, n_frames), dbox, set()),         # object D, appears
    }

    detections = []
    gt_det_ids = {o: [] for o in spans}
    det_of = {}
    det_id = 0
    for f in range(n_frames):
        for o, (frames, boxfn, missing) in spans.items():
            if f in frames and f not in missing:
                detections.append(Detection(det_id, f, boxfn(f), 0.8 + 0.02 * (o % 3)))
                gt_det_ids[o].append(det_id)
                det_of[(o, f)] = det_id
                det_id += 1
    # false positives: one on A's path at frame 10, one between C and D at 26
    fp1 = Detection(det_id, 10, BoundingBox(70, 135, 100, 175), 0.3)
    det_id += 1
    fp2 = Detection(det_id, 26, BoundingBox(135, 40, 165, 80), 0.3)
    det_id += 1
    detections += [fp1, fp2]

    def center(boxfn, t):
        b = boxfn(t)
        return ((b.x1 + b.x2) / 2, (b.y1 + b.y2) / 2)

    all_f = list(range(n_frames))
    tracks = [
        # a1/b1: stay on their objects the whole time
        _fixture_tracks(0, all_f, [center(abox, t) for t in all_f]),
        _fixture_tracks(1, all_f, [center(bbox, t) for t in all_f]),
        # a2: A then jumps to B at the crossing (frame 30)
        _fixture_tracks(2, all_f, [center(abox, t) if t < 30 else center(bbox, t)
                                   for t in all_f], low_conf_frames={30}),
        # b2: B then jumps to A at the crossing
        _fixture_tracks(3, all_f, [center(bbox, t) if t < 30 else center(abox, t)
                                   for t in all_f], low_conf_frames={30}),
        # a3/b3: swap during A's occlusion window, creating skewed cross edges
        _fixture_tracks(4, all_f, [center(abox, t) if t < 34 else center(bbox, t)
                                   for t in all_f], low_conf_frames={34}),
        _fixture_tracks(5, all_f, [center(bbox, t) if t < 36 else center(abox, t)
                                   for t in all_f], low_conf_frames={36}),
        # c1/d1: local coverage for C and D
        _fixture_tracks(6, list(range(0, 25)), [center(cbox, t) for t in range(0, 25)]),
        _fixture_tracks(7, list(range(30, n_frames)),
                        [center(dbox, t) for t in range(30, n_frames)]),
    ]
    # e1: drifts off C, passes through the frame-26 false positive, lands on D
    e1_frames = list(range(15, 46))
    c_end = center(cbox, 24)
    d_start = center(dbox, 30)
    e1_pos = []
    for t in e1_frames:
        if t <= 24:
            e1_pos.append(center(cbox, t))
        elif t < 30:
            alpha = (t - 24) / 6
            e1_pos.append((c_end[0] + alpha * (d_start[0] - c_end[0]),
                           c_end[1] + alpha * (d_start[1] - c_end[1])))
        else:
            e1_pos.append(center(dbox, t))
    tracks.append(_fixture_tracks(8, e1_frames, e1_pos))

    gt_tracks = [GroundTruthTrack(o, tuple(ids)) for o, ids in gt_det_ids.items()]
    true_tracks = []
    for o, (frames, boxfn, _) in spans.items():
        entries = tuple(TrackEntry(f, boxfn(f), False) for f in frames)
        true_tracks.append(OutputTrack(o, entries))
    return Scenario(config, detections, tracks, gt_tracks, true_tracks)
