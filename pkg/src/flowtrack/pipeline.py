"""Long-sequence tracking: chunking, per-chunk inference, id stitching and
hole interpolation.

Chunks are independent (and could be solved concurrently); stitching walks
the chunk chain sequentially, matching track ids across each overlap by
solving an assignment problem on shared detection counts.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data import OutputTrack, PointTrack, TrackEntry
from .geometry import BoundingBox
from .graph import GraphParams, build_graph
from .scoring import ScoringModel
from .solution import solution_to_chains
from .solver import solve, weigh


@dataclass(frozen=True, slots=True)
class ChunkPlan:
    chunk_length: int
    overlap: int
    windows: tuple

    def __post_init__(self):
        if not (self.chunk_length > self.overlap >= 0):
            raise ValueError("need chunk_length > overlap >= 0")


@dataclass(frozen=True, slots=True)
class IdMap:
    """Chunk-local track ids mapped onto global ids; injective per chunk."""

    mapping: dict
    fresh_ids: tuple


def plan_chunks(first_frame: int, last_frame: int, chunk_length: int = 600,
                overlap: int = 60) -> ChunkPlan:
    """Windows advance by chunk_length - overlap; the final one is clipped to
    last_frame, so consecutive windows share exactly `overlap` frames except
    possibly the last pair."""
    if chunk_length <= overlap or overlap < 0:
        raise ValueError("need chunk_length > overlap >= 0")
    if last_frame < first_frame:
        raise ValueError("last_frame precedes first_frame")
    windows = []
    start = first_frame
    stride = chunk_length - overlap
    while True:
        end = start + chunk_length - 1
        if end >= last_frame:
            windows.append((start, last_frame))
            break
        windows.append((start, end))
        start += stride
    return ChunkPlan(chunk_length, overlap, tuple(windows))


def solve_assignment(cost_matrix) -> list:
    """Minimum-cost one-to-one matching between rows and columns; the larger
    side may stay partially unmatched."""
    cost = np.asarray(cost_matrix, dtype=np.float64)
    if cost.size == 0:
        return []
    if not np.isfinite(cost).all():
        raise ValueError("assignment costs must be finite")
    rows, cols = linear_sum_assignment(cost)
    return list(zip((int(r) for r in rows), (int(c) for c in cols)))


def _ids_in_window(chain, window) -> set:
    lo, hi = window
    return {d.id for d in chain if lo <= d.frame <= hi}


def stitch(prev_tracks: dict, next_tracks: dict, overlap_window) -> IdMap:
    """Match next-chunk tracks onto previous-chunk tracks by maximizing the
    number of detections shared inside the overlap window.

    Both arguments map track id -> detection chain. Pairs sharing no
    detection are rejected even if the assignment pairs them; unmatched
    next-chunk tracks are reported as fresh.
    """
    prev_ids = sorted(prev_tracks)
    next_ids = sorted(next_tracks)
    prev_sets = [_ids_in_window(prev_tracks[i], overlap_window) for i in prev_ids]
    next_sets = [_ids_in_window(next_tracks[i], overlap_window) for i in next_ids]
    counts = np.zeros((len(prev_ids), len(next_ids)), dtype=np.float64)
    for r, pset in enumerate(prev_sets):
        for c, nset in enumerate(next_sets):
            counts[r, c] = len(pset & nset)
    mapping = {}
    for r, c in solve_assignment(-counts):
        if counts[r, c] > 0:
            mapping[next_ids[c]] = prev_ids[r]
    fresh = tuple(i for i in next_ids if i not in mapping)
    return IdMap(mapping, fresh)


def interpolate_track(track: OutputTrack) -> OutputTrack:
    """Fill every missing intermediate frame with the per-coordinate linear
    blend of the flanking boxes; inserted entries are flagged. Idempotent."""
    if len(track.entries) < 2:
        return track
    entries = [track.entries[0]]
    for prev, nxt in zip(track.entries, track.entries[1:]):
        gap = nxt.frame - prev.frame
        for step in range(1, gap):
            alpha = step / gap
            a, b = prev.box, nxt.box
            box = BoundingBox(
                a.x1 + alpha * (b.x1 - a.x1), a.y1 + alpha * (b.y1 - a.y1),
                a.x2 + alpha * (b.x2 - a.x2), a.y2 + alpha * (b.y2 - a.y2))
            entries.append(TrackEntry(prev.frame + step, box, True))
        entries.append(nxt)
    return OutputTrack(track.track_id, tuple(entries))


def clip_point_tracks(point_tracks, first_frame: int, last_frame: int) -> list:
    """Restrict tracks to a frame window, dropping those left too short."""
    out = []
    for t in point_tracks:
        pts = tuple(p for p in t.points if first_frame <= p.frame <= last_frame)
        if len(pts) >= 2:
            out.append(PointTrack(t.id, pts))
    return out


def _chunk_chains(detections, point_tracks, model, params, window) -> list:
    lo, hi = window
    dets = [d for d in detections if lo <= d.frame <= hi]
    if not dets:
        return []
    tracks = clip_point_tracks(point_tracks, lo, hi)
    graph = build_graph(dets, tracks, params)
    x = solve(weigh(model, graph), method="potentials")
    return [[graph.vertices[i] for i in chain]
            for chain in solution_to_chains(graph, x)]


def track_sequence_chains(detections, point_tracks, model: ScoringModel,
                          params: GraphParams, chunk_plan: ChunkPlan) -> dict:
    """Chunked tracking, returned as global-id -> detection chain (the later
    chunk's detections win inside an overlap)."""
    if not detections:
        return {}
    global_chains = {}
    next_id = 0
    prev_local = None
    prev_global_of = None
    for w, window in enumerate(chunk_plan.windows):
        local = {i: chain for i, chain in enumerate(
            _chunk_chains(detections, point_tracks, model, params, window))}
        if w == 0 or prev_local is None:
            global_of = {}
            for i in sorted(local):
                global_chains[next_id] = local[i]
                global_of[i] = next_id
                next_id += 1
        else:
            prev_window_tracks = {
                prev_global_of[i]: chain for i, chain in prev_local.items()}
            overlap_window = (window[0], chunk_plan.windows[w - 1][1])
            idmap = stitch(prev_window_tracks, local, overlap_window)
            global_of = {}
            for i in sorted(local):
                if i in idmap.mapping:
                    gid = idmap.mapping[i]
                    kept = [d for d in global_chains[gid] if d.frame < window[0]]
                    global_chains[gid] = kept + local[i]
                else:
                    gid = next_id
                    next_id += 1
                    global_chains[gid] = local[i]
                global_of[i] = gid
        prev_local = local
        prev_global_of = global_of
    return global_chains


def track_sequence(detections, point_tracks, model: ScoringModel,
                   params: GraphParams, chunk_plan: ChunkPlan) -> list:
    """Chunked tracking: build, weigh and solve each window, stitch ids over
    the overlaps, then interpolate every hole."""
    chains = track_sequence_chains(detections, point_tracks, model, params, chunk_plan)
    tracks = []
    for gid in sorted(chains):
        entries = tuple(TrackEntry(d.frame, d.box, False) for d in chains[gid])
        tracks.append(interpolate_track(OutputTrack(gid, entries)))
    return tracks
