import pytest

from flowtrack.data import (
    Detection, GroundTruthTrack, OutputTrack, ParseError, PointTrack,
    TrackEntry, TrackPoint, ValidationError,
    read_dataset, read_detections, read_ground_truth, read_output_tracks,
    read_point_tracks, write_detections, write_ground_truth, write_mot_csv,
    write_output_tracks, write_point_tracks,
)
from flowtrack.geometry import BoundingBox


def box(x=0.0, y=0.0, w=2.0, h=2.0):
    return BoundingBox(x, y, x + w, y + h)


def test_point_track_invariants():
    with pytest.raises(ValidationError):
        PointTrack(1, (TrackPoint(0, 0, 0, 0),))
    with pytest.raises(ValidationError):
        PointTrack(1, (TrackPoint(3, 0, 0, 0), TrackPoint(3, 1, 1, 0)))


def test_detection_negative_frame_rejected():
    with pytest.raises(ValidationError):
        Detection(1, -2, box(), 0.5)


def test_output_track_frames_increasing():
    with pytest.raises(ValidationError):
        OutputTrack(0, (TrackEntry(5, box()), TrackEntry(5, box())))


def test_detections_roundtrip(tmp_path):
    dets = [
        Detection(0, 0, box(0, 0), 0.9),
        Detection(1, 0, box(1, 0), 0.4),
        Detection(7, 3, box(5, 5, 3, 4), 0.75),
    ]
    path = tmp_path / "dets.jsonl"
    write_detections(path, dets)
    assert read_detections(path) == dets


def test_three_record_fixture_values(tmp_path):
    path = tmp_path / "dets.jsonl"
    path.write_text(
        '{"id": 3, "frame": 0, "box": [0, 1, 4, 5], "conf": 0.25}\n'
        '{"id": 4, "frame": 1, "box": [1.5, 1, 5.5, 5], "conf": 0.5}\n'
        '{"id": 9, "frame": 2, "box": [3, 1, 7, 5], "conf": 0.125}\n'
    )
    dets = read_detections(path)
    assert len(dets) == 3
    assert dets[0] == Detection(3, 0, BoundingBox(0, 1, 4, 5), 0.25)
    assert dets[1].box.as_tuple() == (1.5, 1, 5.5, 5)
    assert dets[2].confidence == 0.125


def test_empty_file_gives_empty_collection(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert read_detections(path) == []


def test_parse_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": 1, "frame": 0, "box": [0,0,1,1], "conf": 0.5}\nnot json\n')
    with pytest.raises(ParseError, match=":2"):
        read_detections(path)


def test_missing_field_is_parse_error(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": 1, "frame": 0, "conf": 0.5}\n')
    with pytest.raises(ParseError, match=":1"):
        read_detections(path)


def test_duplicate_detection_id_names_record(tmp_path):
    path = tmp_path / "dup.jsonl"
    path.write_text(
        '{"id": 1, "frame": 0, "box": [0,0,1,1], "conf": 0.5}\n'
        '{"id": 1, "frame": 1, "box": [0,0,1,1], "conf": 0.5}\n'
    )
    with pytest.raises(ValidationError, match="id 1"):
        read_detections(path)


def test_point_track_parse_errors_carry_line(tmp_path):
    path = tmp_path / "klt.jsonl"
    path.write_text('{"id": 0, "points": [[0, "x", 2.0, 0.1], [1, 1.5, 2.5, 0.2]]}\n')
    with pytest.raises(ParseError, match=":1"):
        read_point_tracks(path)
    # invariant violations keep their own error type
    path.write_text('{"id": 0, "points": [[0, 1.0, 2.0, 0.1]]}\n')
    with pytest.raises(ValidationError, match="at least 2"):
        read_point_tracks(path)


def test_point_tracks_roundtrip(tmp_path):
    tracks = [
        PointTrack(0, (TrackPoint(0, 1.0, 2.0, -0.1), TrackPoint(1, 1.5, 2.5, -0.2))),
        PointTrack(5, (TrackPoint(2, 0.0, 0.0, 0.0), TrackPoint(4, 3.0, 1.0, -0.3))),
    ]
    path = tmp_path / "klt.jsonl"
    write_point_tracks(path, tracks)
    assert read_point_tracks(path) == tracks


def test_ground_truth_roundtrip_and_overlap_check(tmp_path):
    tracks = [GroundTruthTrack(0, (1, 2, 3)), GroundTruthTrack(1, (4, 5))]
    path = tmp_path / "gt.jsonl"
    write_ground_truth(path, tracks)
    assert read_ground_truth(path) == tracks

    path.write_text(
        '{"track_id": 0, "detections": [1, 2]}\n'
        '{"track_id": 1, "detections": [2, 3]}\n'
    )
    with pytest.raises(ValidationError, match="detection 2"):
        read_ground_truth(path)


def test_output_tracks_roundtrip(tmp_path):
    tracks = [OutputTrack(0, (TrackEntry(0, box(), False), TrackEntry(1, box(1, 1), True)))]
    path = tmp_path / "out.jsonl"
    write_output_tracks(path, tracks)
    assert read_output_tracks(path) == tracks


def test_mot_csv_export(tmp_path):
    tracks = [OutputTrack(3, (TrackEntry(2, BoundingBox(1, 2, 4, 8)),))]
    path = tmp_path / "out.csv"
    write_mot_csv(path, tracks)
    assert path.read_text() == "2,3,1.00,2.00,3.00,6.00,1,-1,-1,-1\n"


def test_read_dataset_checks_gt_references(tmp_path):
    write_detections(tmp_path / "d.jsonl", [Detection(0, 0, box(), 0.5)])
    write_point_tracks(tmp_path / "p.jsonl",
                       [PointTrack(0, (TrackPoint(0, 1, 1, 0), TrackPoint(1, 1, 1, 0)))])
    write_ground_truth(tmp_path / "g.jsonl", [GroundTruthTrack(0, (0, 99))])
    with pytest.raises(ValidationError, match="99"):
        read_dataset(tmp_path / "d.jsonl", tmp_path / "p.jsonl", tmp_path / "g.jsonl")
    dets, tracks, gt = read_dataset(tmp_path / "d.jsonl", tmp_path / "p.jsonl")
    assert len(dets) == 1 and len(tracks) == 1 and gt is None


def test_read_dataset_checks_gt_frame_order(tmp_path):
    write_detections(tmp_path / "d.jsonl",
                     [Detection(0, 5, box(), 0.5), Detection(1, 2, box(), 0.5)])
    write_point_tracks(tmp_path / "p.jsonl",
                       [PointTrack(0, (TrackPoint(0, 1, 1, 0), TrackPoint(1, 1, 1, 0)))])
    write_ground_truth(tmp_path / "g.jsonl", [GroundTruthTrack(0, (0, 1))])
    with pytest.raises(ValidationError, match="strictly increasing"):
        read_dataset(tmp_path / "d.jsonl", tmp_path / "p.jsonl", tmp_path / "g.jsonl")
