"""Tracking-graph construction.

Detections become vertices. Point tracks connect the detections they pass
through into short edges; fitted velocities project detections forward to
form long-range edges that can skip occlusions. Every edge carries the raw
feature bundles the scoring model consumes.

Graph construction is a pure function of its inputs; separate chunks can be
built concurrently without shared state.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Detection, PointTrack
from .geometry import BoundingBox, boxes_to_array, contains, ioa, ioa_matrix, iou, iou_matrix


@dataclass(frozen=True, slots=True)
class GraphParams:
    """Construction meta-parameters. The frame-rate-dependent ones follow
    the reference values: t_max = 3*fps, n_velest = fps/2, n_project = fps.
    """

    fps: int = 60
    r_neighbours: int = 5
    t_max: int = 180
    n_velest: int = 30
    n_project: int = 60
    n_linpkt: int = 5
    image_diagonal: float = 2202.91

    def __post_init__(self):
        if min(self.fps, self.r_neighbours, self.t_max, self.n_velest,
               self.n_project, self.n_linpkt) <= 0 or self.image_diagonal <= 0:
            raise ValueError("all graph parameters must be positive")
        if self.n_linpkt < 2:
            raise ValueError("n_linpkt must be at least 2")

    @classmethod
    def for_fps(cls, fps: int, image_diagonal: float = 2202.91, r_neighbours: int = 5,
                n_linpkt: int = 5) -> "GraphParams":
        return cls(fps=fps, r_neighbours=r_neighbours, t_max=3 * fps,
                   n_velest=max(2, fps // 2), n_project=fps, n_linpkt=n_linpkt,
                   image_diagonal=image_diagonal)


@dataclass(frozen=True, slots=True)
class KltConnection:
    """One point track linking two detections.

    `shape` is the track segment between the two frames, translated so the
    point at the first frame sits at the origin and resampled to n_linpkt
    uniformly spaced times.
    """

    track_id: int
    temporal_distance: int
    min_confidence: float
    translated_iou: float
    shape: np.ndarray

    def __post_init__(self):
        if self.temporal_distance < 1:
            raise ValueError("klt connection must span at least one frame")


@dataclass(frozen=True, slots=True)
class LongConnection:
    """A velocity-projected link between two detections."""

    temporal_distance: int
    predicted_iou: float
    pre_velocity: tuple[float, float]
    median_post_velocity: tuple[float, float]

    def __post_init__(self):
        if self.temporal_distance < 1:
            raise ValueError("long connection must span at least one frame")


@dataclass(frozen=True, slots=True)
class GraphEdge:
    """All evidence connecting an ordered detection pair.

    `klt_features` / `long_features` are the scaled model-input rows for the
    bundles, cached at build time (one row per connection).
    """

    from_id: int
    to_id: int
    from_index: int
    to_index: int
    klt: tuple[KltConnection, ...]
    long: tuple[LongConnection, ...]
    klt_features: np.ndarray
    long_features: np.ndarray


@dataclass(frozen=True)
class TrackingGraph:
    vertices: tuple[Detection, ...]
    vertex_features: np.ndarray
    edges: tuple[GraphEdge, ...]
    params: GraphParams
    id_to_index: dict = field(repr=False)
    edge_index: dict = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def find_edge(self, from_index: int, to_index: int):
        """Edge position for an ordered vertex-index pair, or None."""
        return self.edge_index.get((from_index, to_index))


def klt_feature_dim(n_linpkt: int) -> int:
    return 3 + 2 * n_linpkt


LONG_FEATURE_DIM = 6


def klt_feature_vector(conn: KltConnection, params: GraphParams) -> np.ndarray:
    """Scaled model input row: temporal gap in seconds, min confidence,
    translated IoU, then the shape points as fractions of the image diagonal.
    """
    row = np.empty(klt_feature_dim(params.n_linpkt), dtype=np.float64)
    row[0] = conn.temporal_distance / params.fps
    row[1] = conn.min_confidence
    row[2] = conn.translated_iou
    row[3:] = (conn.shape / params.image_diagonal).reshape(-1)
    return row


def long_feature_vector(conn: LongConnection, params: GraphParams) -> np.ndarray:
    d = params.image_diagonal
    return np.array([
        conn.temporal_distance / params.fps,
        conn.predicted_iou,
        conn.pre_velocity[0] / d, conn.pre_velocity[1] / d,
        conn.median_post_velocity[0] / d, conn.median_post_velocity[1] / d,
    ], dtype=np.float64)


def fit_velocity(points) -> tuple[float, float]:
    """Least-squares line slope of x(t) and y(t) in pixels per frame."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[0] < 2:
        raise ValueError("need at least two points to fit a velocity")
    t = pts[:, 0] - pts[:, 0].mean()
    denom = float(t @ t)
    if denom == 0.0:
        raise ValueError("all points share one frame; velocity fit is degenerate")
    vx = float(t @ (pts[:, 1] - pts[:, 1].mean())) / denom
    vy = float(t @ (pts[:, 2] - pts[:, 2].mean())) / denom
    return (vx, vy)


def pre_velocity(track: PointTrack, t: int, n_velest: int):
    """Velocity fitted to the n_velest track positions preceding frame t,
    or None when the track history is too short.
    """
    if n_velest < 2:
        return None
    pts = [(p.frame, p.x, p.y) for p in track.points if p.frame < t]
    if len(pts) < n_velest:
        return None
    return fit_velocity(pts[-n_velest:])


def post_velocity(track: PointTrack, t: int, n_velest: int):
    """Mirror image of pre_velocity: fitted to positions after frame t."""
    if n_velest < 2:
        return None
    pts = [(p.frame, p.x, p.y) for p in track.points if p.frame > t]
    if len(pts) < n_velest:
        return None
    return fit_velocity(pts[:n_velest])


def intersect_tracks(detections, point_tracks) -> dict:
    """A_i sets: for each point track, the time-ordered detections whose box
    contains the track's point at the matching frame. One frame may
    contribute several overlapping detections.
    """
    order = sorted(range(len(detections)), key=lambda i: (detections[i].frame, detections[i].id))
    by_frame = {}
    for i in order:
        by_frame.setdefault(detections[i].frame, []).append(detections[i])
    result = {}
    for track in point_tracks:
        hits = []
        for p in track.points:
            for det in by_frame.get(p.frame, ()):
                if contains(det.box, p.x, p.y):
                    hits.append(det)
        result[track.id] = hits
    return result


def neighbour_pairs(a_i, r_neighbours: int, t_max: int) -> list:
    """Forward detection pairs within rank distance r_neighbours along A_i,
    skipping same-frame pairs and pairs more than t_max frames apart. Each
    detection occupies one rank position, co-frame ones included.
    """
    pairs = []
    for i, d1 in enumerate(a_i):
        for j in range(i + 1, min(i + r_neighbours + 1, len(a_i))):
            d2 = a_i[j]
            if d2.frame == d1.frame:
                continue
            if d2.frame - d1.frame > t_max:
                break
            pairs.append((d1, d2))
    return pairs


def detection_features(det: Detection, same_frame_detections) -> tuple[float, float, float]:
    """(confidence, max IoU with any other same-frame detection, max IoA);
    maxima over an empty set are 0.
    """
    max_iou = 0.0
    max_ioa = 0.0
    for other in same_frame_detections:
        if other.id == det.id:
            continue
        max_iou = max(max_iou, iou(det.box, other.box))
        max_ioa = max(max_ioa, ioa(det.box, other.box))
    return (det.confidence, max_iou, max_ioa)


class _TrackArrays:
    """Per-track coordinate arrays for vectorized feature extraction."""

    __slots__ = ("track_id", "frames", "xs", "ys", "confs")

    def __init__(self, track: PointTrack):
        self.track_id = track.id
        self.frames = np.array([p.frame for p in track.points], dtype=np.float64)
        self.xs = np.array([p.x for p in track.points], dtype=np.float64)
        self.ys = np.array([p.y for p in track.points], dtype=np.float64)
        self.confs = np.array([p.confidence for p in track.points], dtype=np.float64)

    def index_at(self, frame: int):
        i = int(np.searchsorted(self.frames, frame))
        if i >= len(self.frames) or self.frames[i] != frame:
            return None
        return i

    def velocity_before(self, t: int, n_velest: int):
        if n_velest < 2:
            return None
        stop = int(np.searchsorted(self.frames, t))
        if stop < n_velest:
            return None
        sl = slice(stop - n_velest, stop)
        return _fit_slice(self.frames[sl], self.xs[sl], self.ys[sl])

    def velocity_after(self, t: int, n_velest: int):
        if n_velest < 2:
            return None
        start = int(np.searchsorted(self.frames, t, side="right"))
        if len(self.frames) - start < n_velest:
            return None
        sl = slice(start, start + n_velest)
        return _fit_slice(self.frames[sl], self.xs[sl], self.ys[sl])


def _fit_slice(t, x, y):
    tc = t - t.mean()
    denom = float(tc @ tc)
    if denom == 0.0:
        return None
    return (float(tc @ (x - x.mean())) / denom, float(tc @ (y - y.mean())) / denom)


def klt_connection_features(track: PointTrack, det1: Detection, det2: Detection,
                            n_linpkt: int) -> KltConnection:
    """Feature bundle for one point track spanning two detections. The track
    must have points at both detection frames.
    """
    arr = _TrackArrays(track)
    i1 = arr.index_at(det1.frame)
    i2 = arr.index_at(det2.frame)
    if i1 is None or i2 is None:
        raise ValueError(
            f"track {track.id} lacks points at frames {det1.frame} and {det2.frame}"
        )
    return _klt_connection(arr, i1, i2, det1.box, det2.box, n_linpkt)


def _klt_connection(arr: _TrackArrays, i1: int, i2: int, box1: BoundingBox,
                    box2: BoundingBox, n_linpkt: int) -> KltConnection:
    t1, t2 = int(arr.frames[i1]), int(arr.frames[i2])
    min_conf = float(arr.confs[i1:i2 + 1].min())
    dx = arr.xs[i2] - arr.xs[i1]
    dy = arr.ys[i2] - arr.ys[i1]
    tiou = iou(box1.translated(dx, dy), box2)
    times = np.linspace(t1, t2, n_linpkt)
    sx = np.interp(times, arr.frames, arr.xs) - arr.xs[i1]
    sy = np.interp(times, arr.frames, arr.ys) - arr.ys[i1]
    shape = np.stack([sx, sy], axis=1)
    return KltConnection(arr.track_id, t2 - t1, min_conf, tiou, shape)


def long_connections(detections, point_tracks, params: GraphParams) -> dict:
    """Velocity-projected connections, keyed by ordered detection-id pair.

    For every detection and every intersecting track with enough history, the
    detection box is translated by the fitted velocity into the next
    n_project frames; any detection there whose IoU with the projection is
    positive receives a connection.
    """
    builder = _GraphBuilder(detections, point_tracks, params)
    out = {}
    for (i1, i2), conns in builder.long_bundles().items():
        out[(builder.dets[i1].id, builder.dets[i2].id)] = conns
    return out


class _GraphBuilder:
    """Shared machinery for graph assembly over one detection set."""

    def __init__(self, detections, point_tracks, params: GraphParams):
        self.params = params
        self.dets = sorted(detections, key=lambda d: (d.frame, d.id))
        ids = [d.id for d in self.dets]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate detection ids")
        self.id_to_index = {d.id: i for i, d in enumerate(self.dets)}
        self.tracks = {t.id: _TrackArrays(t) for t in sorted(point_tracks, key=lambda t: t.id)}

        self.frames = sorted({d.frame for d in self.dets})
        self.det_idx_by_frame = {}
        for i, d in enumerate(self.dets):
            self.det_idx_by_frame.setdefault(d.frame, []).append(i)
        self.boxes_by_frame = {
            f: boxes_to_array([self.dets[i].box for i in idxs])
            for f, idxs in self.det_idx_by_frame.items()
        }
        self._tracks_at = None
        self._a_sets = None
        self._pre_vel_cache = {}
        self._median_post = None

    def tracks_at(self) -> list:
        """For each detection index, the sorted ids of tracks with a point
        inside its box at its frame."""
        if self._tracks_at is None:
            self._compute_intersections()
        return self._tracks_at

    def a_sets(self) -> dict:
        if self._a_sets is None:
            self._compute_intersections()
        return self._a_sets

    def _compute_intersections(self):
        tracks_at = [[] for _ in self.dets]
        a_sets = {}
        for tid, arr in self.tracks.items():
            hits = []
            for k in range(len(arr.frames)):
                f = int(arr.frames[k])
                idxs = self.det_idx_by_frame.get(f)
                if not idxs:
                    continue
                boxes = self.boxes_by_frame[f]
                x, y = arr.xs[k], arr.ys[k]
                inside = np.flatnonzero(
                    (boxes[:, 0] <= x) & (x <= boxes[:, 2])
                    & (boxes[:, 1] <= y) & (y <= boxes[:, 3])
                )
                for j in inside:
                    det_index = idxs[int(j)]
                    hits.append(det_index)
                    tracks_at[det_index].append(tid)
            a_sets[tid] = hits
        self._tracks_at = tracks_at
        self._a_sets = a_sets

    def pre_vel(self, tid: int, t: int):
        key = (tid, t)
        if key not in self._pre_vel_cache:
            self._pre_vel_cache[key] = self.tracks[tid].velocity_before(t, self.params.n_velest)
        return self._pre_vel_cache[key]

    def median_post_velocity(self, det_index: int) -> tuple[float, float]:
        """Component-wise median of the post velocities of the tracks through
        a detection; (0, 0) when none has enough following points."""
        if self._median_post is None:
            self._median_post = {}
        if det_index not in self._median_post:
            det = self.dets[det_index]
            vels = []
            for tid in self.tracks_at()[det_index]:
                v = self.tracks[tid].velocity_after(det.frame, self.params.n_velest)
                if v is not None:
                    vels.append(v)
            if vels:
                arr = np.asarray(vels)
                self._median_post[det_index] = (float(np.median(arr[:, 0])),
                                                float(np.median(arr[:, 1])))
            else:
                self._median_post[det_index] = (0.0, 0.0)
        return self._median_post[det_index]

    def long_hits(self) -> np.ndarray:
        """All velocity-projected hits as a structured (n, 7) float array:
        columns (from_index, to_index, dt, predicted_iou, vx, vy, order).
        Grouped per frame and projection offset so the IoU gating runs on
        whole matrices; `order` preserves the (frame, dt, source, target)
        generation order."""
        p = self.params
        chunks = []
        counter = 0
        for f in self.frames:
            sources = []
            for i in self.det_idx_by_frame[f]:
                for tid in self.tracks_at()[i]:
                    w = self.pre_vel(tid, f)
                    if w is not None:
                        sources.append((i, w[0], w[1]))
            if not sources:
                continue
            src = np.array(sources, dtype=np.float64)
            src_boxes = np.array(
                [self.dets[int(i)].box.as_tuple() for i in src[:, 0]], dtype=np.float64)
            vels = src[:, 1:3]
            for dt in range(1, p.n_project + 1):
                tgt_frame = f + dt
                tgt_idxs = self.det_idx_by_frame.get(tgt_frame)
                if not tgt_idxs:
                    continue
                shift = vels * dt
                proj = src_boxes + np.concatenate([shift, shift], axis=1)
                ious = iou_matrix(proj, self.boxes_by_frame[tgt_frame])
                s_idx, m_idx = np.nonzero(ious > 0.0)
                if not s_idx.size:
                    continue
                n = s_idx.size
                block = np.empty((n, 7), dtype=np.float64)
                block[:, 0] = src[s_idx, 0]
                block[:, 1] = np.asarray(tgt_idxs, dtype=np.float64)[m_idx]
                block[:, 2] = dt
                block[:, 3] = ious[s_idx, m_idx]
                block[:, 4:6] = vels[s_idx]
                block[:, 6] = np.arange(counter, counter + n)
                counter += n
                chunks.append(block)
        if not chunks:
            return np.zeros((0, 7), dtype=np.float64)
        return np.concatenate(chunks, axis=0)

    def long_bundles(self) -> dict:
        """(from_index, to_index) -> [LongConnection] in generation order."""
        bundles = {}
        for row in self.long_hits():
            i1, i2 = int(row[0]), int(row[1])
            conn = LongConnection(
                temporal_distance=int(row[2]), predicted_iou=float(row[3]),
                pre_velocity=(float(row[4]), float(row[5])),
                median_post_velocity=self.median_post_velocity(i2))
            bundles.setdefault((i1, i2), []).append(conn)
        return bundles

    def vertex_features(self) -> np.ndarray:
        feats = np.zeros((len(self.dets), 3), dtype=np.float64)
        for f, idxs in self.det_idx_by_frame.items():
            boxes = self.boxes_by_frame[f]
            confs = [self.dets[i].confidence for i in idxs]
            if len(idxs) == 1:
                feats[idxs[0]] = (confs[0], 0.0, 0.0)
                continue
            ious = iou_matrix(boxes, boxes)
            ioas = ioa_matrix(boxes, boxes)
            np.fill_diagonal(ious, 0.0)
            np.fill_diagonal(ioas, 0.0)
            for row, i in enumerate(idxs):
                feats[i] = (confs[row], float(ious[row].max()), float(ioas[row].max()))
        return feats

    def klt_pair_set(self) -> set:
        pairs = set()
        for tid in self.tracks:
            hits = self.a_sets()[tid]
            for i, d1 in enumerate(hits):
                upper = min(i + self.params.r_neighbours + 1, len(hits))
                for j in range(i + 1, upper):
                    d2 = hits[j]
                    f1, f2 = self.dets[d1].frame, self.dets[d2].frame
                    if f2 == f1:
                        continue
                    if f2 - f1 > self.params.t_max:
                        break
                    pairs.add((d1, d2))
        return pairs

    def _klt_rows_for_track(self, arr: _TrackArrays, i1s, i2s, boxes1, boxes2):
        """Vectorized KltConnection fields for one track over many queries.
        Returns (rows, conns): scaled feature rows and the raw objects."""
        p = self.params
        q = len(i1s)
        t1 = arr.frames[i1s]
        t2 = arr.frames[i2s]
        dt = t2 - t1
        min_conf = np.array([arr.confs[a:b + 1].min() for a, b in zip(i1s, i2s)])
        dx = arr.xs[i2s] - arr.xs[i1s]
        dy = arr.ys[i2s] - arr.ys[i1s]
        shifted = boxes1 + np.stack([dx, dy, dx, dy], axis=1)
        iw = (np.minimum(shifted[:, 2], boxes2[:, 2])
              - np.maximum(shifted[:, 0], boxes2[:, 0]))
        ih = (np.minimum(shifted[:, 3], boxes2[:, 3])
              - np.maximum(shifted[:, 1], boxes2[:, 1]))
        inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
        area1 = (boxes1[:, 2] - boxes1[:, 0]) * (boxes1[:, 3] - boxes1[:, 1])
        area2 = (boxes2[:, 2] - boxes2[:, 0]) * (boxes2[:, 3] - boxes2[:, 1])
        tiou = np.where(inter > 0.0, inter / (area1 + area2 - inter), 0.0)
        frac = np.linspace(0.0, 1.0, p.n_linpkt)
        times = t1[:, None] + dt[:, None] * frac[None, :]
        sx = np.interp(times.ravel(), arr.frames, arr.xs).reshape(q, -1) - arr.xs[i1s][:, None]
        sy = np.interp(times.ravel(), arr.frames, arr.ys).reshape(q, -1) - arr.ys[i1s][:, None]
        shapes = np.stack([sx, sy], axis=2)

        rows = np.empty((q, klt_feature_dim(p.n_linpkt)), dtype=np.float64)
        rows[:, 0] = dt / p.fps
        rows[:, 1] = min_conf
        rows[:, 2] = tiou
        rows[:, 3:] = shapes.reshape(q, -1) / p.image_diagonal
        conns = [
            KltConnection(arr.track_id, int(dt[k]), float(min_conf[k]),
                          float(tiou[k]), shapes[k])
            for k in range(q)
        ]
        return rows, conns

    def build(self) -> TrackingGraph:
        p = self.params
        hits = self.long_hits()
        long_pairs = {(int(a), int(b)) for a, b in hits[:, :2]} if hits.size else set()
        edge_keys = sorted(self.klt_pair_set() | long_pairs)
        key_pos = {key: i for i, key in enumerate(edge_keys)}
        n_edges = len(edge_keys)
        kd = klt_feature_dim(p.n_linpkt)

        # point-track bundles, batched per track (tracks iterate in id order
        # so a stable sort by edge keeps connections ordered by track id)
        track_sets = [set(t) for t in self.tracks_at()]
        queries_by_track = {}
        for key in edge_keys:
            i1, i2 = key
            for tid in sorted(track_sets[i1] & track_sets[i2]):
                queries_by_track.setdefault(tid, []).append(key)
        row_blocks, conn_blocks, pos_blocks = [], [], []
        for tid in sorted(queries_by_track):
            keys = queries_by_track[tid]
            arr = self.tracks[tid]
            i1s = np.array([arr.index_at(self.dets[a].frame) for a, _ in keys])
            i2s = np.array([arr.index_at(self.dets[b].frame) for _, b in keys])
            boxes1 = np.array([self.dets[a].box.as_tuple() for a, _ in keys])
            boxes2 = np.array([self.dets[b].box.as_tuple() for _, b in keys])
            rows, conns = self._klt_rows_for_track(arr, i1s, i2s, boxes1, boxes2)
            row_blocks.append(rows)
            conn_blocks.extend(conns)
            pos_blocks.append(np.array([key_pos[k] for k in keys], dtype=np.int64))
        if row_blocks:
            klt_rows = np.concatenate(row_blocks)
            klt_pos = np.concatenate(pos_blocks)
            order = np.argsort(klt_pos, kind="stable")
            klt_rows = klt_rows[order]
            klt_conns = [conn_blocks[int(i)] for i in order]
            klt_counts = np.bincount(klt_pos, minlength=n_edges)
        else:
            klt_rows = np.zeros((0, kd))
            klt_conns = []
            klt_counts = np.zeros(n_edges, dtype=np.int64)
        klt_splits = np.cumsum(klt_counts)[:-1]
        klt_row_parts = np.split(klt_rows, klt_splits) if n_edges else []

        # long bundles from the hit table
        if hits.size:
            pos = np.array([key_pos[(int(a), int(b))] for a, b in hits[:, :2]],
                           dtype=np.int64)
            order = np.argsort(pos, kind="stable")  # hits already in generation order
            hits = hits[order]
            pos = pos[order]
            mp = np.array([self.median_post_velocity(int(b)) for b in hits[:, 1]])
            long_rows = np.empty((len(hits), LONG_FEATURE_DIM), dtype=np.float64)
            long_rows[:, 0] = hits[:, 2] / p.fps
            long_rows[:, 1] = hits[:, 3]
            long_rows[:, 2:4] = hits[:, 4:6] / p.image_diagonal
            long_rows[:, 4:6] = mp / p.image_diagonal
            long_conns = [
                LongConnection(int(h[2]), float(h[3]), (float(h[4]), float(h[5])),
                               (float(m[0]), float(m[1])))
                for h, m in zip(hits, mp)
            ]
            long_counts = np.bincount(pos, minlength=n_edges)
        else:
            long_rows = np.zeros((0, LONG_FEATURE_DIM))
            long_conns = []
            long_counts = np.zeros(n_edges, dtype=np.int64)
        long_splits = np.cumsum(long_counts)[:-1]
        long_row_parts = np.split(long_rows, long_splits) if n_edges else []

        edges = []
        k_off = 0
        l_off = 0
        for pos_i, (i1, i2) in enumerate(edge_keys):
            nk = int(klt_counts[pos_i])
            nl = int(long_counts[pos_i])
            klt = tuple(klt_conns[k_off:k_off + nk])
            lng = tuple(long_conns[l_off:l_off + nl])
            k_off += nk
            l_off += nl
            if not klt and not lng:
                continue
            edges.append(GraphEdge(
                from_id=self.dets[i1].id, to_id=self.dets[i2].id,
                from_index=i1, to_index=i2, klt=klt, long=lng,
                klt_features=np.ascontiguousarray(klt_row_parts[pos_i]),
                long_features=np.ascontiguousarray(long_row_parts[pos_i]),
            ))
        edge_index = {(e.from_index, e.to_index): i for i, e in enumerate(edges)}
        return TrackingGraph(
            vertices=tuple(self.dets),
            vertex_features=self.vertex_features(),
            edges=tuple(edges),
            params=p,
            id_to_index=dict(self.id_to_index),
            edge_index=edge_index,
        )


def build_graph(detections, point_tracks, params: GraphParams) -> TrackingGraph:
    """Assemble the full tracking graph for one sequence or chunk.

    Vertices are sorted by (frame, id) and edges by endpoint order, so
    identical inputs always produce identical graphs.
    """
    return _GraphBuilder(detections, point_tracks, params).build()


def dump_graph(graph: TrackingGraph, path) -> None:
    """Debug/inspection dump: one JSON object per vertex and per edge."""
    with open(path, "w", encoding="utf-8") as fh:
        for det, feats in zip(graph.vertices, graph.vertex_features):
            fh.write(json.dumps({
                "type": "vertex", "id": det.id, "frame": det.frame,
                "box": list(det.box.as_tuple()), "features": [float(v) for v in feats],
            }) + "\n")
        for e in graph.edges:
            fh.write(json.dumps({
                "type": "edge", "from": e.from_id, "to": e.to_id,
                "klt": [{
                    "track_id": c.track_id, "temporal_distance": c.temporal_distance,
                    "min_confidence": c.min_confidence, "translated_iou": c.translated_iou,
                    "shape": [[float(x), float(y)] for x, y in c.shape],
                } for c in e.klt],
                "long": [{
                    "temporal_distance": c.temporal_distance, "predicted_iou": c.predicted_iou,
                    "pre_velocity": list(c.pre_velocity),
                    "median_post_velocity": list(c.median_post_velocity),
                } for c in e.long],
            }) + "\n")
