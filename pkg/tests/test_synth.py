import pytest

from flowtrack.data import write_detections, write_ground_truth, write_point_tracks
from flowtrack.geometry import contains
from flowtrack.synth import ScenarioConfig, crossing_fixture, generate_scenario


def small_config(**kw):
    base = dict(n_objects=4, n_frames=60, image_width=640, image_height=480,
                miss_rate=0.1, fp_rate=0.5, jitter_sigma=1.0, klt_per_object=2,
                klt_jump_rate=0.2, fps=10, seed=5)
    base.update(kw)
    return ScenarioConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(miss_rate=1.5)
    with pytest.raises(ValueError):
        small_config(klt_jump_rate=-0.1)
    with pytest.raises(ValueError):
        small_config(n_objects=0)


def test_zero_noise_detections_bijective_with_gt():
    scenario = generate_scenario(small_config(miss_rate=0.0, fp_rate=0.0,
                                              jitter_sigma=0.0))
    cfg = scenario.config
    assert len(scenario.detections) == cfg.n_objects * cfg.n_frames
    claimed = [d for t in scenario.gt_tracks for d in t.detections]
    assert sorted(claimed) == [d.id for d in scenario.detections]
    true_boxes = {(t.track_id, e.frame): e.box for t in scenario.true_tracks
                  for e in t.entries}
    for t in scenario.gt_tracks:
        dets = {d.id: d for d in scenario.detections}
        for i, det_id in enumerate(t.detections):
            d = dets[det_id]
            assert d.box == true_boxes[(t.track_id, d.frame)]


def test_same_seed_byte_identical(tmp_path):
    files = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        s = generate_scenario(small_config())
        write_detections(d / "det.jsonl", s.detections)
        write_point_tracks(d / "klt.jsonl", s.point_tracks)
        write_ground_truth(d / "gt.jsonl", s.gt_tracks)
        files.append(d)
    for name in ("det.jsonl", "klt.jsonl", "gt.jsonl"):
        assert (files[0] / name).read_bytes() == (files[1] / name).read_bytes()


def test_different_seeds_differ():
    a = generate_scenario(small_config(seed=1))
    b = generate_scenario(small_config(seed=2))
    assert [d.box for d in a.detections[:20]] != [d.box for d in b.detections[:20]]


def test_miss_rate_within_binomial_bound():
    config = ScenarioConfig(n_objects=20, n_frames=500, miss_rate=0.1,
                            fp_rate=0.0, jitter_sigma=0.0, klt_per_object=1,
                            klt_jump_rate=0.0, fps=10, seed=7)
    scenario = generate_scenario(config)
    total = config.n_objects * config.n_frames
    dropped = total - len(scenario.detections)
    assert 0.08 <= dropped / total <= 0.12


def test_point_tracks_ride_inside_boxes():
    scenario = generate_scenario(small_config(miss_rate=0.0, jitter_sigma=0.0,
                                              klt_jump_rate=0.0, fp_rate=0.0))
    boxes = {}
    for t in scenario.true_tracks:
        for e in t.entries:
            boxes.setdefault(e.frame, []).append(e.box)
    inside = 0
    total = 0
    for t in scenario.point_tracks:
        for p in t.points:
            total += 1
            inside += any(contains(b, p.x, p.y) for b in boxes[p.frame])
    assert inside / total > 0.99


def test_jumps_produce_low_confidence_points():
    scenario = generate_scenario(small_config(n_objects=8, klt_jump_rate=0.8,
                                              image_width=320, image_height=240,
                                              n_frames=120))
    low = [p for t in scenario.point_tracks for p in t.points if p.confidence < -0.4]
    assert low, "high jump rate in a crowded scene should produce jump points"
    # replacements keep coverage: more tracks than the initial allocation
    assert len(scenario.point_tracks) > scenario.config.n_objects * scenario.config.klt_per_object


def test_crossing_fixture_structure():
    s = crossing_fixture()
    assert len(s.gt_tracks) == 4
    det_ids = {d.id for d in s.detections}
    claimed = {d for t in s.gt_tracks for d in t.detections}
    assert claimed < det_ids  # the false positives stay unclaimed
    assert len(det_ids - claimed) == 2
    a_frames = sorted({next(e.frame for t2 in s.true_tracks if t2.track_id == 0
                            for e in t2.entries if e.frame == f)
                       for f in range(60) if f not in (33, 34, 35)})
    assert len(a_frames) == 57
