"""Domain records and their line-oriented JSON file formats.

All records are immutable after construction and safe to share across
threads. Files are JSON-lines: one object per record, so large datasets
stream without loading everything twice.
"""

import json
from dataclasses import dataclass, field

from .geometry import BoundingBox


class ParseError(ValueError):
    """Raised for a malformed line; message carries file path and line number."""


class ValidationError(ValueError):
    """Raised when a parsed record violates a type invariant."""


@dataclass(frozen=True, slots=True)
class Detection:
    """A single-frame detector output: frame number, box and confidence."""

    id: int
    frame: int
    box: BoundingBox
    confidence: float

    def __post_init__(self):
        if self.frame < 0:
            raise ValidationError(f"detection {self.id}: negative frame {self.frame}")


@dataclass(frozen=True, slots=True)
class TrackPoint:
    frame: int
    x: float
    y: float
    confidence: float


@dataclass(frozen=True, slots=True)
class PointTrack:
    """A sparse feature-point trajectory; frames strictly increase.

    The confidence of the first point is whatever the producing tracker
    wrote; it has no natural frame-to-frame definition and is kept as-is.
    """

    id: int
    points: tuple[TrackPoint, ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValidationError(f"point track {self.id}: needs at least 2 points")
        frames = [p.frame for p in self.points]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError(f"point track {self.id}: frames not strictly increasing")

    @property
    def first_frame(self) -> int:
        return self.points[0].frame

    @property
    def last_frame(self) -> int:
        return self.points[-1].frame


@dataclass(frozen=True, slots=True)
class GroundTruthTrack:
    """An annotated track as an ordered list of detection ids."""

    track_id: int
    detections: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class TrackEntry:
    frame: int
    box: BoundingBox
    interpolated: bool = False


@dataclass(frozen=True, slots=True)
class OutputTrack:
    """A tracker output: per-frame boxes, some possibly interpolated."""

    track_id: int
    entries: tuple[TrackEntry, ...] = field(default=())

    def __post_init__(self):
        frames = [e.frame for e in self.entries]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError(f"output track {self.track_id}: frames not strictly increasing")


def _iter_json_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc


def read_detections(path) -> list[Detection]:
    out = []
    seen = set()
    for lineno, obj in _iter_json_lines(path):
        try:
            box = BoundingBox(*(float(v) for v in obj["box"]))
            det = Detection(int(obj["id"]), int(obj["frame"]), box, float(obj["conf"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ParseError(f"{path}:{lineno}: bad detection record ({exc})") from exc
        if det.id in seen:
            raise ValidationError(f"detection id {det.id} duplicated ({path}:{lineno})")
        seen.add(det.id)
        out.append(det)
    return out


def write_detections(path, detections) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in detections:
            fh.write(json.dumps({
                "id": d.id, "frame": d.frame,
                "box": list(d.box.as_tuple()), "conf": d.confidence,
            }) + "\n")


def read_point_tracks(path) -> list[PointTrack]:
    out = []
    seen = set()
    for lineno, obj in _iter_json_lines(path):
        try:
            points = tuple(
                TrackPoint(int(p[0]), float(p[1]), float(p[2]), float(p[3]))
                for p in obj["points"]
            )
            track = PointTrack(int(obj["id"]), points)
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ParseError(f"{path}:{lineno}: bad point-track record ({exc})") from exc
        if track.id in seen:
            raise ValidationError(f"point track id {track.id} duplicated ({path}:{lineno})")
        seen.add(track.id)
        out.append(track)
    return out


def write_point_tracks(path, tracks) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tracks:
            fh.write(json.dumps({
                "id": t.id,
                "points": [[p.frame, p.x, p.y, p.confidence] for p in t.points],
            }) + "\n")


def read_ground_truth(path) -> list[GroundTruthTrack]:
    out = []
    used = {}
    for lineno, obj in _iter_json_lines(path):
        try:
            track = GroundTruthTrack(int(obj["track_id"]), tuple(int(d) for d in obj["detections"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{lineno}: bad ground-truth record ({exc})") from exc
        for det_id in track.detections:
            if det_id in used:
                raise ValidationError(
                    f"detection {det_id} appears in tracks {used[det_id]} and {track.track_id}"
                )
            used[det_id] = track.track_id
        out.append(track)
    return out


def write_ground_truth(path, tracks) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tracks:
            fh.write(json.dumps({"track_id": t.track_id, "detections": list(t.detections)}) + "\n")


def read_output_tracks(path) -> list[OutputTrack]:
    out = []
    for lineno, obj in _iter_json_lines(path):
        try:
            entries = tuple(
                TrackEntry(int(e[0]), BoundingBox(*(float(v) for v in e[1])), bool(e[2]))
                for e in obj["entries"]
            )
            out.append(OutputTrack(int(obj["track_id"]), entries))
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ParseError(f"{path}:{lineno}: bad output-track record ({exc})") from exc
    return out


def write_output_tracks(path, tracks) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tracks:
            fh.write(json.dumps({
                "track_id": t.track_id,
                "entries": [[e.frame, list(e.box.as_tuple()), int(e.interpolated)] for e in t.entries],
            }) + "\n")


def write_mot_csv(path, tracks) -> None:
    """MOTChallenge-style export: frame,track_id,x1,y1,w,h,1,-1,-1,-1."""
    rows = []
    for t in tracks:
        for e in t.entries:
            b = e.box
            rows.append((e.frame, t.track_id, b.x1, b.y1, b.x2 - b.x1, b.y2 - b.y1))
    rows.sort()
    with open(path, "w", encoding="utf-8") as fh:
        for frame, tid, x, y, w, h in rows:
            fh.write(f"{frame},{tid},{x:.2f},{y:.2f},{w:.2f},{h:.2f},1,-1,-1,-1\n")


def read_dataset(detections_path, point_tracks_path, ground_truth_path=None):
    """Load one sequence worth of input files, validating all invariants."""
    detections = read_detections(detections_path)
    point_tracks = read_point_tracks(point_tracks_path)
    ground_truth = None
    if ground_truth_path is not None:
        ground_truth = read_ground_truth(ground_truth_path)
        frame_of = {d.id: d.frame for d in detections}
        for track in ground_truth:
            for det_id in track.detections:
                if det_id not in frame_of:
                    raise ValidationError(
                        f"ground-truth track {track.track_id} references unknown detection {det_id}"
                    )
            frames = [frame_of[d] for d in track.detections]
            if any(b <= a for a, b in zip(frames, frames[1:])):
                raise ValidationError(
                    f"ground-truth track {track.track_id}: frames not strictly increasing")
    return detections, point_tracks, ground_truth
